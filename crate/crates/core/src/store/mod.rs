//! Embedded SQLite store.
//!
//! One database file per data directory (`<data_dir>/deliberate.sqlite3`) in
//! WAL mode. All writes go through a single writer connection in immediate
//! transactions; reads run in their own read transaction on a separate
//! connection, so a read sees one consistent snapshot and never waits for a
//! writer to commit. Uniqueness, reference and cross-row rules live in the
//! schema as constraints and triggers.

mod jobs;
mod labeled;
mod scores;
mod suggestions;

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rusqlite::types::ValueRef;
use rusqlite::{params, Connection, OpenFlags, OptionalExtension, Row, Transaction, TransactionBehavior};

pub use labeled::IngestReport;
pub use suggestions::Declaration;

use crate::domain::{
    now_millis, Comment, CommentId, Debate, DebateId, NewComment, NewDebate, Participant, ParticipantId,
    DEFAULT_TOP_K,
};
use crate::error::{Error, Result};
use crate::pipeline::ScoringJob;

pub const SCHEMA_VERSION: i64 = 1;
pub const DB_FILE: &str = "deliberate.sqlite3";

const SCHEMA: &str = include_str!("schema.sql");

/// Defaults applied to debates created without explicit hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebateDefaults {
    pub top_k: u32,
    pub threshold: f64,
}

impl Default for DebateDefaults {
    fn default() -> Self {
        DebateDefaults {
            top_k: DEFAULT_TOP_K,
            threshold: 3.0,
        }
    }
}

pub struct Store {
    path: PathBuf,
    writer: Mutex<Connection>,
    reader: Mutex<Connection>,
}

impl Store {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self> {
        let dir = data_dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(DB_FILE);

        let writer = Connection::open(&path)?;
        writer.pragma_update(None, "journal_mode", "WAL")?;
        writer.pragma_update(None, "foreign_keys", true)?;
        writer.pragma_update(None, "synchronous", "NORMAL")?;
        writer.busy_timeout(std::time::Duration::from_secs(5))?;
        writer.execute_batch(SCHEMA)?;

        let version: Option<i64> = writer
            .query_row("SELECT value FROM meta WHERE key = 'schema_version'", [], |r| {
                r.get::<_, String>(0)
            })
            .optional()?
            .map(|v| v.parse().unwrap_or(-1));
        match version {
            None => {
                writer.execute(
                    "INSERT INTO meta (key, value) VALUES ('schema_version', ?1)",
                    [SCHEMA_VERSION.to_string()],
                )?;
            }
            Some(v) if v == SCHEMA_VERSION => {}
            Some(v) => {
                return Err(Error::config(
                    "data_dir",
                    format!("store schema version {v} is not supported (expected {SCHEMA_VERSION})"),
                ))
            }
        }

        let reader = Connection::open_with_flags(
            &path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )?;
        reader.busy_timeout(std::time::Duration::from_secs(5))?;

        Ok(Store {
            path,
            writer: Mutex::new(writer),
            reader: Mutex::new(reader),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub(crate) fn write<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.writer.lock().expect("store writer poisoned");
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    pub(crate) fn read<T>(&self, f: impl FnOnce(&Connection) -> Result<T>) -> Result<T> {
        let mut conn = self.reader.lock().expect("store reader poisoned");
        let tx = conn.transaction_with_behavior(TransactionBehavior::Deferred)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    /// Liveness probe for the health route.
    pub fn ping(&self) -> bool {
        self.read(|c| Ok(c.query_row("SELECT 1", [], |r| r.get::<_, i64>(0))?))
            .is_ok()
    }

    // Participants.

    pub fn create_participant(&self, display_name: &str, auth_token: &str) -> Result<Participant> {
        if display_name.trim().is_empty() {
            return Err(Error::validation("display name must not be empty"));
        }
        self.write(|tx| {
            tx.execute(
                "INSERT INTO participants (display_name, auth_token) VALUES (?1, ?2)",
                params![display_name, auth_token],
            )
            .map_err(constraint_as_validation)?;
            Ok(Participant {
                participant_id: ParticipantId(tx.last_insert_rowid()),
                display_name: display_name.to_string(),
                auth_token: auth_token.to_string(),
            })
        })
    }

    pub fn participant(&self, id: ParticipantId) -> Result<Participant> {
        self.read(|c| {
            c.query_row(
                "SELECT participant_id, display_name, auth_token FROM participants WHERE participant_id = ?1",
                [id.0],
                participant_from_row,
            )
            .optional()?
            .ok_or(Error::NotFound {
                kind: "participant",
                id: id.0,
            })
        })
    }

    pub fn participant_by_token(&self, token: &str) -> Result<Option<Participant>> {
        self.read(|c| {
            Ok(c.query_row(
                "SELECT participant_id, display_name, auth_token FROM participants WHERE auth_token = ?1",
                [token],
                participant_from_row,
            )
            .optional()?)
        })
    }

    // Debates.

    pub fn create_debate(&self, new: &NewDebate, defaults: DebateDefaults) -> Result<Debate> {
        new.validate()?;
        let debate = Debate {
            debate_id: DebateId(0),
            question: new.question.trim().to_string(),
            module_kind: new.module_kind,
            top_k: new.top_k.unwrap_or(defaults.top_k),
            threshold: new.threshold.unwrap_or(defaults.threshold),
            created_at: now_millis(),
        };
        crate::domain::validate_threshold(debate.threshold)?;
        self.write(|tx| {
            tx.execute(
                "INSERT INTO debates (question, module_kind, top_k, threshold, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![
                    debate.question,
                    debate.module_kind.as_str(),
                    debate.top_k,
                    debate.threshold,
                    debate.created_at
                ],
            )
            .map_err(constraint_as_validation)?;
            Ok(Debate {
                debate_id: DebateId(tx.last_insert_rowid()),
                ..debate
            })
        })
    }

    pub fn debate(&self, id: DebateId) -> Result<Debate> {
        self.read(|c| load_debate(c, id))
    }

    pub fn debates(&self) -> Result<Vec<Debate>> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("SELECT {DEBATE_COLS} FROM debates ORDER BY debate_id"))?;
            let rows = stmt.query_map([], debate_from_row)?;
            Ok(rows.collect::<rusqlite::Result<_>>()?)
        })
    }

    // Comments.

    /// Stores a comment and its pending scoring job in one transaction.
    pub fn append_comment_with_event(&self, new: &NewComment) -> Result<(Comment, ScoringJob)> {
        self.write(|tx| {
            let comment = insert_comment(tx, new)?;
            let job = jobs::ensure_job_tx(tx, comment.comment_id)?;
            Ok((comment, job))
        })
    }

    pub fn comment(&self, id: CommentId) -> Result<Comment> {
        self.read(|c| load_comment(c, id))
    }

    /// Comments of a debate in insertion order.
    pub fn comments(&self, debate: DebateId) -> Result<Vec<Comment>> {
        self.read(|c| debate_comments(c, debate))
    }

    /// All rows of every table, in a fixed order, as text. Two stores with
    /// the same logical content produce the same dump.
    pub fn dump(&self) -> Result<String> {
        const TABLES: [&str; 10] = [
            "meta",
            "participants",
            "debates",
            "comments",
            "stance_declarations",
            "comment_stances",
            "quality_scores",
            "suggestions",
            "labeled_examples",
            "scoring_jobs",
        ];
        self.read(|c| {
            let mut out = String::new();
            for table in TABLES {
                out.push_str(&format!("## {table}\n"));
                let mut stmt = c.prepare(&format!("SELECT * FROM {table} ORDER BY rowid"))?;
                let n = stmt.column_count();
                let mut rows = stmt.query([])?;
                while let Some(row) = rows.next()? {
                    let mut cells = Vec::with_capacity(n);
                    for i in 0..n {
                        cells.push(match row.get_ref(i)? {
                            ValueRef::Null => "NULL".to_string(),
                            ValueRef::Integer(v) => v.to_string(),
                            ValueRef::Real(v) => format!("{v:?}"),
                            ValueRef::Text(t) => format!("{:?}", String::from_utf8_lossy(t)),
                            ValueRef::Blob(b) => format!("x'{}'", hex::encode(b)),
                        });
                    }
                    out.push_str(&cells.join("|"));
                    out.push('\n');
                }
            }
            Ok(out)
        })
    }
}

/// Constraint and trigger failures are caller errors, not storage faults.
pub(crate) fn constraint_as_validation(e: rusqlite::Error) -> Error {
    match &e {
        rusqlite::Error::SqliteFailure(f, msg) if f.code == rusqlite::ErrorCode::ConstraintViolation => {
            Error::Validation(msg.clone().unwrap_or_else(|| e.to_string()))
        }
        _ => Error::Store(e),
    }
}

const DEBATE_COLS: &str = "debate_id, question, module_kind, top_k, threshold, created_at";
const COMMENT_COLS: &str = "comment_id, debate_id, author_id, body, parent_id, created_at";

fn participant_from_row(r: &Row<'_>) -> rusqlite::Result<Participant> {
    Ok(Participant {
        participant_id: ParticipantId(r.get(0)?),
        display_name: r.get(1)?,
        auth_token: r.get(2)?,
    })
}

fn debate_from_row(r: &Row<'_>) -> rusqlite::Result<Debate> {
    let kind: String = r.get(2)?;
    Ok(Debate {
        debate_id: DebateId(r.get(0)?),
        question: r.get(1)?,
        module_kind: kind.parse().map_err(|e: Error| {
            rusqlite::Error::FromSqlConversionFailure(2, rusqlite::types::Type::Text, e.into())
        })?,
        top_k: r.get(3)?,
        threshold: r.get(4)?,
        created_at: r.get(5)?,
    })
}

pub(crate) fn comment_from_row(r: &Row<'_>) -> rusqlite::Result<Comment> {
    Ok(Comment {
        comment_id: CommentId(r.get(0)?),
        debate_id: DebateId(r.get(1)?),
        author_id: ParticipantId(r.get(2)?),
        body: r.get(3)?,
        parent_id: r.get::<_, Option<i64>>(4)?.map(CommentId),
        created_at: r.get(5)?,
    })
}

pub(crate) fn load_debate(c: &Connection, id: DebateId) -> Result<Debate> {
    c.query_row(
        &format!("SELECT {DEBATE_COLS} FROM debates WHERE debate_id = ?1"),
        [id.0],
        debate_from_row,
    )
    .optional()?
    .ok_or(Error::NotFound {
        kind: "debate",
        id: id.0,
    })
}

pub(crate) fn load_comment(c: &Connection, id: CommentId) -> Result<Comment> {
    c.query_row(
        &format!("SELECT {COMMENT_COLS} FROM comments WHERE comment_id = ?1"),
        [id.0],
        comment_from_row,
    )
    .optional()?
    .ok_or(Error::NotFound {
        kind: "comment",
        id: id.0,
    })
}

pub(crate) fn debate_comments(c: &Connection, debate: DebateId) -> Result<Vec<Comment>> {
    let mut stmt = c.prepare_cached(&format!(
        "SELECT {COMMENT_COLS} FROM comments WHERE debate_id = ?1 ORDER BY created_at"
    ))?;
    let rows = stmt.query_map([debate.0], comment_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn insert_comment(tx: &Transaction<'_>, new: &NewComment) -> Result<Comment> {
    new.validate()?;
    let author_known: bool = tx.query_row(
        "SELECT EXISTS (SELECT 1 FROM participants WHERE participant_id = ?1)",
        [new.author_id.0],
        |r| r.get(0),
    )?;
    if !author_known {
        return Err(Error::validation(format!("unknown participant {}", new.author_id)));
    }
    if let Some(parent) = new.parent_id {
        let parent_debate: Option<i64> = tx
            .query_row(
                "SELECT debate_id FROM comments WHERE comment_id = ?1",
                [parent.0],
                |r| r.get(0),
            )
            .optional()?;
        if parent_debate != Some(new.debate_id.0) {
            return Err(Error::validation(format!(
                "parent comment {parent} is not part of debate {}",
                new.debate_id
            )));
        }
    }
    let seq: Option<u64> = tx
        .query_row(
            "UPDATE debates SET next_seq = next_seq + 1 WHERE debate_id = ?1 RETURNING next_seq - 1",
            [new.debate_id.0],
            |r| r.get(0),
        )
        .optional()?;
    let Some(created_at) = seq else {
        return Err(Error::validation(format!("unknown debate {}", new.debate_id)));
    };
    tx.execute(
        "INSERT INTO comments (debate_id, author_id, body, parent_id, created_at)
         VALUES (?1, ?2, ?3, ?4, ?5)",
        params![
            new.debate_id.0,
            new.author_id.0,
            new.body,
            new.parent_id.map(|p| p.0),
            created_at
        ],
    )
    .map_err(constraint_as_validation)?;
    Ok(Comment {
        comment_id: CommentId(tx.last_insert_rowid()),
        debate_id: new.debate_id,
        author_id: new.author_id,
        body: new.body.clone(),
        parent_id: new.parent_id,
        created_at,
    })
}
