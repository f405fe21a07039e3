//! Opposing-comment recommendation.
//!
//! A participant declares a stance once per epoch; every re-declaration
//! starts a new epoch with an empty suggestion history. The pool offered to
//! a participant holds the comments whose predicted stance is opposite to
//! the declared one, minus the participant's own comments, unscored
//! comments and comments already suggested in the current epoch. The pick
//! is uniform over the pool sorted by comment id, driven by a 32-bit LCG
//! whose state is persisted per (participant, debate) so that a fixed seed
//! reproduces the whole sequence.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::domain::{
    Comment, CommentId, DebateId, ModuleKind, ParticipantId, StanceLabel, StanceRecord, Suggestion, SuggestionId,
};
use crate::error::{Error, Result};
use crate::pipeline::ScoringJob;
use crate::store::Store;

/// `x' = 1664525 x + 1013904223 (mod 2^32)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lcg {
    state: u32,
}

impl Lcg {
    pub const MULTIPLIER: u32 = 1_664_525;
    pub const INCREMENT: u32 = 1_013_904_223;

    pub fn new(seed: u32) -> Self {
        Lcg { state: seed }
    }

    pub fn state(self) -> u32 {
        self.state
    }

    pub fn next_u32(&mut self) -> u32 {
        self.state = self
            .state
            .wrapping_mul(Self::MULTIPLIER)
            .wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Advances once and reduces into `0..len`. `len` must be non-zero.
    pub fn pick_index(&mut self, len: usize) -> usize {
        (self.next_u32() as u64 % len as u64) as usize
    }
}

/// Opposing-stance comments a participant may still be shown, by id.
pub fn opposing_pool(
    declared: StanceLabel,
    participant: ParticipantId,
    comments: &[Comment],
    predicted: &HashMap<CommentId, StanceLabel>,
    already_shown: &HashSet<CommentId>,
) -> Vec<Comment> {
    let wanted = declared.opposite();
    let mut pool: Vec<Comment> = comments
        .iter()
        .filter(|c| c.author_id != participant)
        .filter(|c| predicted.get(&c.comment_id) == Some(&wanted))
        .filter(|c| !already_shown.contains(&c.comment_id))
        .cloned()
        .collect();
    pool.sort_by_key(|c| c.comment_id);
    pool
}

/// Uniform pick from a pool already sorted by comment id.
pub fn choose<'a>(pool: &'a [Comment], rng: &mut Lcg) -> Option<&'a Comment> {
    if pool.is_empty() {
        return None;
    }
    let idx = rng.pick_index(pool.len());
    pool.get(idx)
}

/// Store-backed recommendation lifecycle for recommendation debates.
#[derive(Clone)]
pub struct Recommender {
    store: Arc<Store>,
    seed: u32,
}

impl Recommender {
    pub fn new(store: Arc<Store>, seed: u32) -> Self {
        Recommender { store, seed }
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    fn require_recommendation(&self, debate: DebateId) -> Result<()> {
        let d = self.store.debate(debate)?;
        if d.module_kind != ModuleKind::Recommendation {
            return Err(Error::UnsupportedModule {
                debate,
                kind: d.module_kind,
            });
        }
        Ok(())
    }

    /// Records the participant's stance. Declaring again starts a new epoch
    /// and so forgets which comments were already suggested.
    pub fn declare_stance(
        &self,
        participant: ParticipantId,
        debate: DebateId,
        label: StanceLabel,
    ) -> Result<StanceRecord> {
        self.require_recommendation(debate)?;
        let decl = self.store.declare_stance(participant, debate, label, self.seed)?;
        Ok(decl.record())
    }

    pub fn declared_stance(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<StanceRecord>> {
        Ok(self.store.declaration(participant, debate)?.map(|d| d.record()))
    }

    pub fn eligible_pool(&self, participant: ParticipantId, debate: DebateId) -> Result<Vec<Comment>> {
        self.require_recommendation(debate)?;
        self.store.eligible_pool(participant, debate)
    }

    /// Draws and persists one suggestion; `None` when the pool is empty.
    pub fn suggest(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
        self.require_recommendation(debate)?;
        self.store.suggest(participant, debate)
    }

    /// Re-suggestion from the popup icon. Same contract as [`Self::suggest`];
    /// the history exclusion is what makes it a *new* comment.
    pub fn next_suggestion(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
        self.suggest(participant, debate)
    }

    /// The latest unanswered suggestion of the current epoch, or a fresh one
    /// when there is none. Refreshing the popup therefore does not use up
    /// pool entries.
    pub fn current_or_suggest(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
        self.require_recommendation(debate)?;
        if let Some(open) = self.store.open_suggestion(participant, debate)? {
            return Ok(Some(open));
        }
        self.store.suggest(participant, debate)
    }

    /// Posts the participant's reply to a suggested comment.
    pub fn record_reply(
        &self,
        suggestion: SuggestionId,
        author: ParticipantId,
        body: &str,
    ) -> Result<(Comment, ScoringJob, Suggestion)> {
        self.store.record_reply(suggestion, author, body)
    }
}
