use thiserror::Error;

use crate::domain::{DebateId, ModuleKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure of a scoring backend, split by whether a retry can help.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    /// Transport failure, timeout or 5xx. The job is rescheduled.
    #[error("retriable scoring failure: {0}")]
    Retriable(String),
    /// 4xx or a malformed response. The comment is marked unscorable.
    #[error("permanent scoring failure: {0}")]
    Permanent(String),
}

impl ScoringError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ScoringError::Retriable(_))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: i64 },

    #[error("debate {debate} does not run the {kind} module")]
    UnsupportedModule { debate: DebateId, kind: ModuleKind },

    #[error("no stance declared for debate {0}")]
    StanceRequired(DebateId),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("unauthorized: {0}")]
    Unauthorized(String),

    #[error("forbidden: {0}")]
    Forbidden(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Scoring(#[from] ScoringError),

    #[error("storage: {0}")]
    Store(#[from] rusqlite::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(reason: impl Into<String>) -> Self {
        Error::Validation(reason.into())
    }
}
