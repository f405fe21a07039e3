//! Domain values shared by every subsystem.
//!
//! Values are plain data and immutable once constructed. The JSON encoding
//! produced by `serde` (field names as declared here) is the canonical wire
//! form used by the HTTP interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of deliberative quality indicators that make up a score.
pub const INDICATOR_COUNT: usize = 20;

/// Default number of top comments per quality debate.
pub const DEFAULT_TOP_K: u32 = 3;

/// Upper end of the normalized quality scale.
pub const SCORE_MAX: f64 = 5.0;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub i64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_type!(DebateId);
id_type!(ParticipantId);
id_type!(CommentId);
id_type!(SuggestionId);
id_type!(JobId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Recommendation,
    Quality,
}

impl ModuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModuleKind::Recommendation => "recommendation",
            ModuleKind::Quality => "quality",
        }
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recommendation" => Ok(ModuleKind::Recommendation),
            "quality" => Ok(ModuleKind::Quality),
            other => Err(Error::validation(format!("unknown module kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Debate {
    pub debate_id: DebateId,
    pub question: String,
    pub module_kind: ModuleKind,
    pub top_k: u32,
    pub threshold: f64,
    /// Unix milliseconds.
    pub created_at: i64,
}

/// Request to open a debate. Missing hyperparameters fall back to the
/// service defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewDebate {
    pub question: String,
    pub module_kind: ModuleKind,
    #[serde(default)]
    pub top_k: Option<u32>,
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl NewDebate {
    pub fn new(question: impl Into<String>, module_kind: ModuleKind) -> Self {
        NewDebate {
            question: question.into(),
            module_kind,
            top_k: None,
            threshold: None,
        }
    }

    pub fn with_top_k(mut self, top_k: u32) -> Self {
        self.top_k = Some(top_k);
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.question.trim().is_empty() {
            return Err(Error::validation("debate question must not be empty"));
        }
        if let Some(t) = self.threshold {
            validate_threshold(t)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_threshold(t: f64) -> Result<()> {
    if !(0.0..=SCORE_MAX).contains(&t) {
        return Err(Error::validation(format!(
            "threshold {t} outside [0, {SCORE_MAX}]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: ParticipantId,
    pub display_name: String,
    pub auth_token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: CommentId,
    pub debate_id: DebateId,
    pub author_id: ParticipantId,
    pub body: String,
    pub parent_id: Option<CommentId>,
    /// Position in the debate's insertion sequence, assigned by the store.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewComment {
    pub debate_id: DebateId,
    pub author_id: ParticipantId,
    pub body: String,
    #[serde(default)]
    pub parent_id: Option<CommentId>,
}

impl NewComment {
    pub fn new(debate_id: DebateId, author_id: ParticipantId, body: impl Into<String>) -> Self {
        NewComment {
            debate_id,
            author_id,
            body: body.into(),
            parent_id: None,
        }
    }

    pub fn reply_to(mut self, parent: CommentId) -> Self {
        self.parent_id = Some(parent);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.body.trim().is_empty() {
            return Err(Error::validation("comment body must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceLabel {
    InFavor,
    Against,
}

impl StanceLabel {
    /// Label implied by a favor probability. Exactly 0.5 is `Against`.
    pub fn from_p_favor(p_favor: f64) -> Self {
        if p_favor > 0.5 {
            StanceLabel::InFavor
        } else {
            StanceLabel::Against
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            StanceLabel::InFavor => StanceLabel::Against,
            StanceLabel::Against => StanceLabel::InFavor,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::InFavor => "in_favor",
            StanceLabel::Against => "against",
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_favor" => Ok(StanceLabel::InFavor),
            "against" => Ok(StanceLabel::Against),
            other => Err(Error::validation(format!("unknown stance label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceSource {
    Declared,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StanceSubject {
    Comment {
        comment_id: CommentId,
    },
    Participant {
        participant_id: ParticipantId,
        debate_id: DebateId,
    },
}

/// Model version recorded on declared stances.
pub const DECLARED_MODEL_VERSION: &str = "declared";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceRecord {
    pub subject: StanceSubject,
    pub label: StanceLabel,
    pub p_favor: f64,
    pub source: StanceSource,
    pub model_version: String,
}

impl StanceRecord {
    pub fn declared(participant_id: ParticipantId, debate_id: DebateId, label: StanceLabel) -> Self {
        let p_favor = match label {
            StanceLabel::InFavor => 1.0,
            StanceLabel::Against => 0.0,
        };
        StanceRecord {
            subject: StanceSubject::Participant {
                participant_id,
                debate_id,
            },
            label,
            p_favor,
            source: StanceSource::Declared,
            model_version: DECLARED_MODEL_VERSION.to_string(),
        }
    }

    /// A model prediction for a comment. The label is derived from `p_favor`.
    pub fn predicted(
        comment_id: CommentId,
        p_favor: f64,
        model_version: impl Into<String>,
    ) -> Result<Self> {
        let record = StanceRecord {
            subject: StanceSubject::Comment { comment_id },
            label: StanceLabel::from_p_favor(p_favor),
            p_favor,
            source: StanceSource::Predicted,
            model_version: model_version.into(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_favor) {
            return Err(Error::validation(format!(
                "p_favor {} outside [0, 1]",
                self.p_favor
            )));
        }
        if self.label != StanceLabel::from_p_favor(self.p_favor) {
            return Err(Error::validation(format!(
                "label {} inconsistent with p_favor {}",
                self.label, self.p_favor
            )));
        }
        if self.source == StanceSource::Declared && self.p_favor != 0.0 && self.p_favor != 1.0 {
            return Err(Error::validation("declared stance must have p_favor 0 or 1"));
        }
        Ok(())
    }

    /// Distance from the decision boundary; small means hard to classify.
    pub fn margin(&self) -> f64 {
        (self.p_favor - 0.5).abs()
    }
}

/// The 20 indicator weights of the quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightVectorRepr", into = "WeightVectorRepr")]
pub struct WeightVector {
    version: String,
    names: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightVectorRepr {
    version: String,
    indicator_names: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<WeightVectorRepr> for WeightVector {
    type Error = Error;

    fn try_from(r: WeightVectorRepr) -> Result<Self> {
        WeightVector::new(r.version, r.indicator_names.into_iter().zip(r.weights).collect())
    }
}

impl From<WeightVector> for WeightVectorRepr {
    fn from(w: WeightVector) -> Self {
        WeightVectorRepr {
            version: w.version,
            indicator_names: w.names,
            weights: w.weights,
        }
    }
}

impl WeightVector {
    pub fn new(version: impl Into<String>, entries: Vec<(String, f64)>) -> Result<Self> {
        let version = version.into();
        if version.trim().is_empty() {
            return Err(Error::config("weights.version", "must not be empty"));
        }
        if entries.len() != INDICATOR_COUNT {
            return Err(Error::config(
                "weights",
                format!("expected {INDICATOR_COUNT} weights, got {}", entries.len()),
            ));
        }
        if let Some((name, w)) = entries.iter().find(|(_, w)| !w.is_finite()) {
            return Err(Error::config("weights", format!("weight for `{name}` is {w}")));
        }
        if entries.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::config("weights", "all weights are zero"));
        }
        let (names, weights) = entries.into_iter().unzip();
        Ok(WeightVector {
            version,
            names,
            weights,
        })
    }

    /// Placeholder weights: the three named positive indicators at +1,
    /// sarcasm at -1, everything else 0. Not the published estimates.
    pub fn placeholder() -> Self {
        let entries = INDICATOR_NAMES
            .iter()
            .map(|&name| {
                let w = match name {
                    "justification" | "proposing solutions" | "referencing other users" => 1.0,
                    "sarcasm" => -1.0,
                    _ => 0.0,
                };
                (name.to_string(), w)
            })
            .collect();
        WeightVector::new("aqua-placeholder-1", entries).expect("placeholder weights are valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn indicator_names(&self) -> &[String] {
        &self.names
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let entries = self
            .names
            .iter()
            .cloned()
            .zip(self.weights.iter().map(|w| w * factor))
            .collect();
        WeightVector::new(self.version.clone(), entries)
    }
}

/// Default indicator names, in weight-vector order.
pub const INDICATOR_NAMES: [&str; INDICATOR_COUNT] = [
    "relevance",
    "fact",
    "opinion",
    "justification",
    "proposing solutions",
    "additional knowledge",
    "question",
    "referencing other users",
    "referencing medium",
    "referencing contents",
    "referencing personal",
    "referencing format",
    "polite form of address",
    "respect",
    "screaming",
    "vulgar",
    "insult",
    "sarcasm",
    "discrimination",
    "storytelling",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub comment_id: CommentId,
    pub predictions: Vec<f64>,
    pub raw: f64,
    pub normalized: f64,
    pub weights_version: String,
}

impl QualityScore {
    pub fn validate(&self) -> Result<()> {
        if self.predictions.len() != INDICATOR_COUNT {
            return Err(Error::validation(format!(
                "expected {INDICATOR_COUNT} predictions, got {}",
                self.predictions.len()
            )));
        }
        if let Some(p) = self.predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::validation(format!("prediction {p} outside [0, 1]")));
        }
        if !(0.0..=SCORE_MAX).contains(&self.normalized) {
            return Err(Error::validation(format!(
                "normalized score {} outside [0, {SCORE_MAX}]",
                self.normalized
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub suggestion_id: SuggestionId,
    pub debate_id: DebateId,
    pub participant_id: ParticipantId,
    pub comment_id: CommentId,
    /// Unix milliseconds.
    pub shown_at: i64,
    /// Stance declaration epoch the suggestion was drawn in.
    pub epoch: u32,
    pub reply_comment_id: Option<CommentId>,
}

pub(crate) fn now_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}
