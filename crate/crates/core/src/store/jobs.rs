use std::collections::HashSet;

use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};

use super::{constraint_as_validation, load_comment, load_debate, Store};
use crate::domain::{Comment, CommentId, Debate, JobId};
use crate::error::{Error, Result};
use crate::pipeline::{JobCounts, JobKind, JobState, RetryPolicy, ScoreResult, ScoringJob};

const JOB_COLS: &str = "job_id, comment_id, kind, attempts, state, not_before, last_error";

fn job_from_row(r: &Row<'_>) -> rusqlite::Result<ScoringJob> {
    let kind: String = r.get(2)?;
    let state: String = r.get(4)?;
    let conv = |i: usize, e: Error| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e.into())
    };
    Ok(ScoringJob {
        job_id: JobId(r.get(0)?),
        comment_id: CommentId(r.get(1)?),
        kind: kind.parse().map_err(|e| conv(2, e))?,
        attempts: r.get(3)?,
        state: state.parse().map_err(|e| conv(4, e))?,
        not_before: r.get(5)?,
        last_error: r.get(6)?,
    })
}

fn load_job(c: &Connection, id: JobId) -> Result<ScoringJob> {
    c.query_row(
        &format!("SELECT {JOB_COLS} FROM scoring_jobs WHERE job_id = ?1"),
        [id.0],
        job_from_row,
    )
    .optional()?
    .ok_or(Error::NotFound { kind: "job", id: id.0 })
}

/// Inserts the pending job for a comment unless one exists already.
pub(super) fn ensure_job_tx(tx: &Transaction<'_>, comment: CommentId) -> Result<ScoringJob> {
    let kind: Option<String> = tx
        .query_row(
            "SELECT d.module_kind FROM comments c JOIN debates d ON d.debate_id = c.debate_id
             WHERE c.comment_id = ?1",
            [comment.0],
            |r| r.get(0),
        )
        .optional()?;
    let Some(kind) = kind else {
        return Err(Error::NotFound {
            kind: "comment",
            id: comment.0,
        });
    };
    let kind = JobKind::for_module(kind.parse()?);
    tx.execute(
        "INSERT INTO scoring_jobs (comment_id, kind) VALUES (?1, ?2)
         ON CONFLICT (comment_id) DO NOTHING",
        params![comment.0, kind.as_str()],
    )
    .map_err(constraint_as_validation)?;
    let job = tx.query_row(
        &format!("SELECT {JOB_COLS} FROM scoring_jobs WHERE comment_id = ?1"),
        [comment.0],
        job_from_row,
    )?;
    Ok(job)
}

fn write_result_tx(tx: &Transaction<'_>, result: &ScoreResult) -> Result<()> {
    match result {
        ScoreResult::Stance(r) => super::scores::upsert_stance_tx(tx, r),
        ScoreResult::Quality(q) => super::scores::upsert_quality_tx(tx, q),
    }
}

impl Store {
    pub fn ensure_job(&self, comment: CommentId) -> Result<ScoringJob> {
        self.write(|tx| ensure_job_tx(tx, comment))
    }

    pub fn job(&self, id: JobId) -> Result<ScoringJob> {
        self.read(|c| load_job(c, id))
    }

    pub fn job_for_comment(&self, comment: CommentId) -> Result<Option<ScoringJob>> {
        self.read(|c| {
            Ok(c.query_row(
                &format!("SELECT {JOB_COLS} FROM scoring_jobs WHERE comment_id = ?1"),
                [comment.0],
                job_from_row,
            )
            .optional()?)
        })
    }

    pub fn jobs(&self) -> Result<Vec<ScoringJob>> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("SELECT {JOB_COLS} FROM scoring_jobs ORDER BY job_id"))?;
            let rows = stmt.query_map([], job_from_row)?;
            Ok(rows.collect::<rusqlite::Result<_>>()?)
        })
    }

    /// Oldest-due pending job that may run at `now` and is not in `skip`.
    pub fn next_runnable_job(&self, now: i64, skip: &HashSet<JobId>) -> Result<Option<ScoringJob>> {
        self.read(|c| {
            let mut stmt = c.prepare_cached(&format!(
                "SELECT {JOB_COLS} FROM scoring_jobs WHERE state = 'pending' AND not_before <= ?1
                 ORDER BY not_before, job_id"
            ))?;
            let mut rows = stmt.query([now])?;
            while let Some(row) = rows.next()? {
                let job = job_from_row(row)?;
                if !skip.contains(&job.job_id) {
                    return Ok(Some(job));
                }
            }
            Ok(None)
        })
    }

    /// Earliest `not_before` among pending jobs not in `skip`.
    pub fn next_due_time(&self, skip: &HashSet<JobId>) -> Result<Option<i64>> {
        self.read(|c| {
            let mut stmt = c.prepare_cached(
                "SELECT job_id, not_before FROM scoring_jobs WHERE state = 'pending' ORDER BY not_before",
            )?;
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                if !skip.contains(&JobId(row.get(0)?)) {
                    return Ok(Some(row.get(1)?));
                }
            }
            Ok(None)
        })
    }

    pub fn job_counts(&self) -> Result<JobCounts> {
        self.read(|c| {
            let mut counts = JobCounts::default();
            let mut stmt = c.prepare_cached("SELECT state, COUNT(*) FROM scoring_jobs GROUP BY state")?;
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                let state: String = row.get(0)?;
                let n: u64 = row.get(1)?;
                match state.parse::<JobState>()? {
                    JobState::Pending => counts.pending = n,
                    JobState::Done => counts.done = n,
                    JobState::FailedPermanent => counts.failed = n,
                }
            }
            Ok(counts)
        })
    }

    /// The comment and debate a job scores.
    pub fn job_context(&self, job: &ScoringJob) -> Result<(Comment, Debate)> {
        self.read(|c| {
            let comment = load_comment(c, job.comment_id)?;
            let debate = load_debate(c, comment.debate_id)?;
            Ok((comment, debate))
        })
    }

    /// Persists a result and marks its job done. A job that is already done
    /// keeps its row; only the (identical) result is rewritten.
    pub fn complete_job(&self, id: JobId, result: &ScoreResult) -> Result<ScoringJob> {
        self.write(|tx| {
            let job = load_job(tx, id)?;
            if job.comment_id != result.comment_id() || job.kind != result.kind() {
                return Err(Error::validation(format!("result does not belong to job {id}")));
            }
            if job.state == JobState::FailedPermanent {
                return Err(Error::Conflict(format!("job {id} failed permanently")));
            }
            write_result_tx(tx, result)?;
            if job.state == JobState::Pending {
                tx.execute(
                    "UPDATE scoring_jobs SET state = 'done', attempts = attempts + 1, last_error = NULL
                     WHERE job_id = ?1",
                    [id.0],
                )?;
            }
            load_job(tx, id)
        })
    }

    /// Counts a failed attempt and either reschedules the job with backoff
    /// or fails it for good.
    pub fn fail_job(
        &self,
        id: JobId,
        retriable: bool,
        message: &str,
        now: i64,
        policy: &RetryPolicy,
    ) -> Result<ScoringJob> {
        self.write(|tx| {
            let job = load_job(tx, id)?;
            if job.state != JobState::Pending {
                return Ok(job);
            }
            let attempts = job.attempts + 1;
            if retriable && attempts < policy.max_attempts {
                let due = now + policy.backoff_after(attempts).as_millis() as i64;
                tx.execute(
                    "UPDATE scoring_jobs SET attempts = ?2, not_before = ?3, last_error = ?4 WHERE job_id = ?1",
                    params![id.0, attempts, due, message],
                )?;
            } else {
                tx.execute(
                    "UPDATE scoring_jobs SET attempts = ?2, state = 'failed_permanent', last_error = ?3
                     WHERE job_id = ?1",
                    params![id.0, attempts, message],
                )?;
            }
            load_job(tx, id)
        })
    }
}
