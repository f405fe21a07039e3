use std::collections::HashMap;

use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};

use super::{constraint_as_validation, debate_comments, load_debate, Store};
use crate::domain::{Comment, CommentId, Debate, DebateId, QualityScore, StanceRecord, StanceSource, StanceSubject};
use crate::error::{Error, Result};
use crate::quality::ScoredComment;

pub(super) fn upsert_stance_tx(tx: &Transaction<'_>, record: &StanceRecord) -> Result<()> {
    record.validate()?;
    let StanceSubject::Comment { comment_id } = record.subject else {
        return Err(Error::validation("only comment stances are stored as predictions"));
    };
    if record.source != StanceSource::Predicted {
        return Err(Error::validation("comment stances must be predicted"));
    }
    tx.execute(
        "INSERT INTO comment_stances (comment_id, model_version, label, p_favor) VALUES (?1, ?2, ?3, ?4)
         ON CONFLICT (comment_id, model_version) DO UPDATE SET label = excluded.label, p_favor = excluded.p_favor",
        params![comment_id.0, record.model_version, record.label.as_str(), record.p_favor],
    )
    .map_err(constraint_as_validation)?;
    Ok(())
}

pub(super) fn upsert_quality_tx(tx: &Transaction<'_>, score: &QualityScore) -> Result<()> {
    score.validate()?;
    let predictions = serde_json::to_string(&score.predictions).expect("floats serialize");
    tx.execute(
        "INSERT INTO quality_scores (comment_id, weights_version, predictions, raw, normalized)
         VALUES (?1, ?2, ?3, ?4, ?5)
         ON CONFLICT (comment_id, weights_version) DO UPDATE SET
            predictions = excluded.predictions, raw = excluded.raw, normalized = excluded.normalized",
        params![score.comment_id.0, score.weights_version, predictions, score.raw, score.normalized],
    )
    .map_err(constraint_as_validation)?;
    Ok(())
}

fn stance_from_row(r: &Row<'_>, offset: usize) -> rusqlite::Result<StanceRecord> {
    let label: String = r.get(offset + 2)?;
    Ok(StanceRecord {
        subject: StanceSubject::Comment {
            comment_id: CommentId(r.get(offset)?),
        },
        model_version: r.get(offset + 1)?,
        label: label.parse().map_err(|e: Error| {
            rusqlite::Error::FromSqlConversionFailure(offset + 2, rusqlite::types::Type::Text, e.into())
        })?,
        p_favor: r.get(offset + 3)?,
        source: StanceSource::Predicted,
    })
}

fn quality_from_row(r: &Row<'_>, offset: usize) -> rusqlite::Result<QualityScore> {
    let predictions: String = r.get(offset + 2)?;
    Ok(QualityScore {
        comment_id: CommentId(r.get(offset)?),
        weights_version: r.get(offset + 1)?,
        predictions: serde_json::from_str(&predictions).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(offset + 2, rusqlite::types::Type::Text, e.into())
        })?,
        raw: r.get(offset + 3)?,
        normalized: r.get(offset + 4)?,
    })
}

const LATEST_STANCE: &str = "s.rowid = (SELECT MAX(s2.rowid) FROM comment_stances s2 WHERE s2.comment_id = s.comment_id)";
const LATEST_QUALITY: &str =
    "q.rowid = (SELECT MAX(q2.rowid) FROM quality_scores q2 WHERE q2.comment_id = q.comment_id)";

pub(crate) fn latest_stances(c: &Connection, debate: DebateId) -> Result<Vec<StanceRecord>> {
    let mut stmt = c.prepare_cached(&format!(
        "SELECT s.comment_id, s.model_version, s.label, s.p_favor
         FROM comment_stances s JOIN comments c ON c.comment_id = s.comment_id
         WHERE c.debate_id = ?1 AND {LATEST_STANCE}
         ORDER BY s.comment_id"
    ))?;
    let rows = stmt.query_map([debate.0], |r| stance_from_row(r, 0))?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

fn scored_comments(c: &Connection, debate: DebateId) -> Result<Vec<ScoredComment>> {
    let mut stmt = c.prepare_cached(&format!(
        "SELECT c.created_at, q.comment_id, q.weights_version, q.predictions, q.raw, q.normalized
         FROM quality_scores q JOIN comments c ON c.comment_id = q.comment_id
         WHERE c.debate_id = ?1 AND {LATEST_QUALITY}
         ORDER BY c.created_at"
    ))?;
    let rows = stmt.query_map([debate.0], |r| {
        Ok(ScoredComment {
            created_at: r.get(0)?,
            score: quality_from_row(r, 1)?,
        })
    })?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

/// One consistent read of everything a debate listing needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DebateSnapshot {
    pub debate: Debate,
    pub comments: Vec<Comment>,
    pub scores: Vec<ScoredComment>,
}

impl Store {
    pub fn put_stance(&self, record: &StanceRecord) -> Result<()> {
        self.write(|tx| upsert_stance_tx(tx, record))
    }

    pub fn put_quality_score(&self, score: &QualityScore) -> Result<()> {
        self.write(|tx| upsert_quality_tx(tx, score))
    }

    /// Most recently written stance prediction for a comment.
    pub fn comment_stance(&self, comment: CommentId) -> Result<Option<StanceRecord>> {
        self.read(|c| {
            Ok(c.query_row(
                &format!(
                    "SELECT s.comment_id, s.model_version, s.label, s.p_favor FROM comment_stances s
                     WHERE s.comment_id = ?1 AND {LATEST_STANCE}"
                ),
                [comment.0],
                |r| stance_from_row(r, 0),
            )
            .optional()?)
        })
    }

    pub fn quality_score(&self, comment: CommentId) -> Result<Option<QualityScore>> {
        self.read(|c| {
            Ok(c.query_row(
                &format!(
                    "SELECT q.comment_id, q.weights_version, q.predictions, q.raw, q.normalized
                     FROM quality_scores q WHERE q.comment_id = ?1 AND {LATEST_QUALITY}"
                ),
                [comment.0],
                |r| quality_from_row(r, 0),
            )
            .optional()?)
        })
    }

    /// Comments of a debate paired with their stance predictions; unscored
    /// comments are left out.
    pub fn predicted_stances(&self, debate: DebateId) -> Result<Vec<(Comment, StanceRecord)>> {
        self.read(|c| {
            let mut stances: HashMap<CommentId, StanceRecord> = latest_stances(c, debate)?
                .into_iter()
                .map(|s| (subject_id(&s), s))
                .collect();
            let mut out: Vec<(Comment, StanceRecord)> = debate_comments(c, debate)?
                .into_iter()
                .filter_map(|comment| stances.remove(&comment.comment_id).map(|s| (comment, s)))
                .collect();
            out.sort_by_key(|(c, _)| c.comment_id);
            Ok(out)
        })
    }

    /// All current quality scores of a debate, read atomically.
    pub fn snapshot_scores(&self, debate: DebateId) -> Result<Vec<ScoredComment>> {
        self.read(|c| scored_comments(c, debate))
    }

    pub fn debate_snapshot(&self, debate: DebateId) -> Result<DebateSnapshot> {
        self.read(|c| {
            Ok(DebateSnapshot {
                debate: load_debate(c, debate)?,
                comments: debate_comments(c, debate)?,
                scores: scored_comments(c, debate)?,
            })
        })
    }
}

fn subject_id(r: &StanceRecord) -> CommentId {
    match r.subject {
        StanceSubject::Comment { comment_id } => comment_id,
        StanceSubject::Participant { .. } => unreachable!("comment_stances rows are comment subjects"),
    }
}
