use std::collections::{HashMap, HashSet};

use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};

use super::{constraint_as_validation, debate_comments, insert_comment, jobs, load_comment, Store};
use crate::domain::{
    now_millis, Comment, CommentId, DebateId, NewComment, ParticipantId, StanceLabel, StanceRecord, StanceSubject,
    Suggestion, SuggestionId,
};
use crate::error::{Error, Result};
use crate::pipeline::ScoringJob;
use crate::recommend::{choose, opposing_pool, Lcg};

/// A participant's declared stance for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub participant_id: ParticipantId,
    pub debate_id: DebateId,
    pub epoch: u32,
    pub label: StanceLabel,
    pub rng_state: u32,
    pub declared_at: i64,
}

impl Declaration {
    pub fn record(&self) -> StanceRecord {
        StanceRecord::declared(self.participant_id, self.debate_id, self.label)
    }
}

const DECL_COLS: &str = "participant_id, debate_id, epoch, label, rng_state, declared_at";
const SUGGESTION_COLS: &str = "suggestion_id, debate_id, participant_id, comment_id, shown_at, epoch, reply_comment_id";

fn declaration_from_row(r: &Row<'_>) -> rusqlite::Result<Declaration> {
    let label: String = r.get(3)?;
    Ok(Declaration {
        participant_id: ParticipantId(r.get(0)?),
        debate_id: DebateId(r.get(1)?),
        epoch: r.get(2)?,
        label: label.parse().map_err(|e: Error| {
            rusqlite::Error::FromSqlConversionFailure(3, rusqlite::types::Type::Text, e.into())
        })?,
        rng_state: r.get(4)?,
        declared_at: r.get(5)?,
    })
}

fn suggestion_from_row(r: &Row<'_>) -> rusqlite::Result<Suggestion> {
    Ok(Suggestion {
        suggestion_id: SuggestionId(r.get(0)?),
        debate_id: DebateId(r.get(1)?),
        participant_id: ParticipantId(r.get(2)?),
        comment_id: CommentId(r.get(3)?),
        shown_at: r.get(4)?,
        epoch: r.get(5)?,
        reply_comment_id: r.get::<_, Option<i64>>(6)?.map(CommentId),
    })
}

fn current_declaration(c: &Connection, participant: ParticipantId, debate: DebateId) -> Result<Option<Declaration>> {
    Ok(c.query_row(
        &format!(
            "SELECT {DECL_COLS} FROM stance_declarations WHERE participant_id = ?1 AND debate_id = ?2
             ORDER BY epoch DESC LIMIT 1"
        ),
        params![participant.0, debate.0],
        declaration_from_row,
    )
    .optional()?)
}

fn load_suggestion(c: &Connection, id: SuggestionId) -> Result<Suggestion> {
    c.query_row(
        &format!("SELECT {SUGGESTION_COLS} FROM suggestions WHERE suggestion_id = ?1"),
        [id.0],
        suggestion_from_row,
    )
    .optional()?
    .ok_or(Error::NotFound {
        kind: "suggestion",
        id: id.0,
    })
}

fn pool_for(c: &Connection, decl: &Declaration) -> Result<Vec<Comment>> {
    let comments = debate_comments(c, decl.debate_id)?;
    let predicted: HashMap<CommentId, StanceLabel> = super::scores::latest_stances(c, decl.debate_id)?
        .into_iter()
        .filter_map(|s| match s.subject {
            StanceSubject::Comment { comment_id } => Some((comment_id, s.label)),
            StanceSubject::Participant { .. } => None,
        })
        .collect();
    let mut stmt = c.prepare_cached(
        "SELECT comment_id FROM suggestions WHERE participant_id = ?1 AND debate_id = ?2 AND epoch = ?3",
    )?;
    let shown: HashSet<CommentId> = stmt
        .query_map(params![decl.participant_id.0, decl.debate_id.0, decl.epoch], |r| {
            Ok(CommentId(r.get(0)?))
        })?
        .collect::<rusqlite::Result<_>>()?;
    Ok(opposing_pool(decl.label, decl.participant_id, &comments, &predicted, &shown))
}

fn require_declaration(c: &Connection, participant: ParticipantId, debate: DebateId) -> Result<Declaration> {
    current_declaration(c, participant, debate)?.ok_or(Error::StanceRequired(debate))
}

fn suggest_tx(tx: &Transaction<'_>, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
    let decl = require_declaration(tx, participant, debate)?;
    let pool = pool_for(tx, &decl)?;
    let mut rng = Lcg::new(decl.rng_state);
    let Some(picked) = choose(&pool, &mut rng) else {
        return Ok(None);
    };
    let shown_at = now_millis();
    tx.execute(
        "INSERT INTO suggestions (debate_id, participant_id, comment_id, epoch, shown_at)
         VALUES (?1, ?2, ?3, ?4, ?5)",
        params![debate.0, participant.0, picked.comment_id.0, decl.epoch, shown_at],
    )
    .map_err(constraint_as_validation)?;
    let id = SuggestionId(tx.last_insert_rowid());
    tx.execute(
        "UPDATE stance_declarations SET rng_state = ?4
         WHERE participant_id = ?1 AND debate_id = ?2 AND epoch = ?3",
        params![participant.0, debate.0, decl.epoch, rng.state()],
    )?;
    Ok(Some(Suggestion {
        suggestion_id: id,
        debate_id: debate,
        participant_id: participant,
        comment_id: picked.comment_id,
        shown_at,
        epoch: decl.epoch,
        reply_comment_id: None,
    }))
}

impl Store {
    /// Opens a new declaration epoch with the RNG reset to `seed`.
    pub fn declare_stance(
        &self,
        participant: ParticipantId,
        debate: DebateId,
        label: StanceLabel,
        seed: u32,
    ) -> Result<Declaration> {
        self.write(|tx| {
            let epoch: u32 = tx.query_row(
                "SELECT COALESCE(MAX(epoch), 0) + 1 FROM stance_declarations
                 WHERE participant_id = ?1 AND debate_id = ?2",
                params![participant.0, debate.0],
                |r| r.get(0),
            )?;
            let record = StanceRecord::declared(participant, debate, label);
            tx.execute(
                "INSERT INTO stance_declarations (participant_id, debate_id, epoch, label, p_favor, rng_state, declared_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                params![participant.0, debate.0, epoch, label.as_str(), record.p_favor, seed, now_millis()],
            )
            .map_err(constraint_as_validation)?;
            require_declaration(tx, participant, debate)
        })
    }

    pub fn declaration(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Declaration>> {
        self.read(|c| current_declaration(c, participant, debate))
    }

    /// Every declaration of a participant in a debate, oldest epoch first.
    pub fn declaration_history(&self, participant: ParticipantId, debate: DebateId) -> Result<Vec<Declaration>> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!(
                "SELECT {DECL_COLS} FROM stance_declarations WHERE participant_id = ?1 AND debate_id = ?2
                 ORDER BY epoch"
            ))?;
            let rows = stmt.query_map(params![participant.0, debate.0], declaration_from_row)?;
            Ok(rows.collect::<rusqlite::Result<_>>()?)
        })
    }

    pub fn eligible_pool(&self, participant: ParticipantId, debate: DebateId) -> Result<Vec<Comment>> {
        self.read(|c| {
            let decl = require_declaration(c, participant, debate)?;
            pool_for(c, &decl)
        })
    }

    /// Draws, persists and returns one suggestion in a single write
    /// transaction, so concurrent calls for one participant serialize.
    pub fn suggest(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
        self.write(|tx| suggest_tx(tx, participant, debate))
    }

    /// Latest suggestion of the current epoch if it has not been answered.
    pub fn open_suggestion(&self, participant: ParticipantId, debate: DebateId) -> Result<Option<Suggestion>> {
        self.read(|c| {
            let Some(decl) = current_declaration(c, participant, debate)? else {
                return Ok(None);
            };
            let latest = c
                .query_row(
                    &format!(
                        "SELECT {SUGGESTION_COLS} FROM suggestions
                         WHERE participant_id = ?1 AND debate_id = ?2 AND epoch = ?3
                         ORDER BY suggestion_id DESC LIMIT 1"
                    ),
                    params![participant.0, debate.0, decl.epoch],
                    suggestion_from_row,
                )
                .optional()?;
            Ok(latest.filter(|s| s.reply_comment_id.is_none()))
        })
    }

    pub fn suggestion(&self, id: SuggestionId) -> Result<Suggestion> {
        self.read(|c| load_suggestion(c, id))
    }

    pub fn suggestions(&self, debate: DebateId) -> Result<Vec<Suggestion>> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!(
                "SELECT {SUGGESTION_COLS} FROM suggestions WHERE debate_id = ?1 ORDER BY suggestion_id"
            ))?;
            let rows = stmt.query_map([debate.0], suggestion_from_row)?;
            Ok(rows.collect::<rusqlite::Result<_>>()?)
        })
    }

    /// Stores the reply comment (with its scoring job) and links it to the
    /// suggestion, all in one transaction.
    pub fn record_reply(
        &self,
        suggestion: SuggestionId,
        author: ParticipantId,
        body: &str,
    ) -> Result<(Comment, ScoringJob, Suggestion)> {
        self.write(|tx| {
            let s = load_suggestion(tx, suggestion)?;
            if s.participant_id != author {
                return Err(Error::Forbidden(format!(
                    "suggestion {suggestion} was shown to another participant"
                )));
            }
            if s.reply_comment_id.is_some() {
                return Err(Error::Conflict(format!("suggestion {suggestion} already has a reply")));
            }
            let target = load_comment(tx, s.comment_id)?;
            let comment = insert_comment(
                tx,
                &NewComment::new(target.debate_id, author, body).reply_to(target.comment_id),
            )?;
            let job = jobs::ensure_job_tx(tx, comment.comment_id)?;
            tx.execute(
                "UPDATE suggestions SET reply_comment_id = ?2 WHERE suggestion_id = ?1",
                params![suggestion.0, comment.comment_id.0],
            )
            .map_err(constraint_as_validation)?;
            let updated = load_suggestion(tx, suggestion)?;
            Ok((comment, job, updated))
        })
    }
}
