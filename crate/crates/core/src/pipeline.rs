//! Comment-created event handling.
//!
//! Storing a comment also stores its pending [`ScoringJob`] in the same
//! transaction. Jobs are then picked up by [`Pipeline::drain`] or by
//! background [`Workers`], routed to the stance or quality backend by the
//! debate's module, and their result written back keyed by
//! `(comment_id, model_version)`. Delivery is at-least-once; writes are
//! idempotent upserts, so running a job twice changes nothing.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{QualityBackend, StanceBackend};
use crate::domain::{now_millis, CommentId, JobId, ModuleKind, QualityScore, StanceRecord, WeightVector};
use crate::error::{Error, Result, ScoringError};
use crate::quality;
use crate::stance;
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Stance,
    Quality,
}

impl JobKind {
    pub fn for_module(kind: ModuleKind) -> Self {
        match kind {
            ModuleKind::Recommendation => JobKind::Stance,
            ModuleKind::Quality => JobKind::Quality,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobKind::Stance => "stance",
            JobKind::Quality => "quality",
        }
    }
}

impl FromStr for JobKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stance" => Ok(JobKind::Stance),
            "quality" => Ok(JobKind::Quality),
            other => Err(Error::validation(format!("unknown job kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Done,
    FailedPermanent,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Pending => "pending",
            JobState::Done => "done",
            JobState::FailedPermanent => "failed_permanent",
        }
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JobState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pending" => Ok(JobState::Pending),
            "done" => Ok(JobState::Done),
            "failed_permanent" => Ok(JobState::FailedPermanent),
            other => Err(Error::validation(format!("unknown job state `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringJob {
    pub job_id: JobId,
    pub comment_id: CommentId,
    pub kind: JobKind,
    pub attempts: u32,
    pub state: JobState,
    /// Unix milliseconds before which a retry must not run.
    pub not_before: i64,
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreResult {
    Stance(StanceRecord),
    Quality(QualityScore),
}

impl ScoreResult {
    pub fn kind(&self) -> JobKind {
        match self {
            ScoreResult::Stance(_) => JobKind::Stance,
            ScoreResult::Quality(_) => JobKind::Quality,
        }
    }

    pub fn comment_id(&self) -> CommentId {
        match self {
            ScoreResult::Stance(r) => match r.subject {
                crate::domain::StanceSubject::Comment { comment_id } => comment_id,
                crate::domain::StanceSubject::Participant { .. } => CommentId(-1),
            },
            ScoreResult::Quality(q) => q.comment_id,
        }
    }
}

/// Exponential backoff: after the n-th failed attempt wait
/// `base * factor^(n-1)`; give up once `max_attempts` attempts were made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base: Duration::from_secs(1),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    pub fn backoff_after(&self, attempts: u32) -> Duration {
        let exp = attempts.saturating_sub(1).min(30);
        self.base.saturating_mul(self.factor.saturating_pow(exp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JobCounts {
    pub pending: u64,
    pub done: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DrainStats {
    pub processed: usize,
    pub failed: usize,
}

/// Time source for retry scheduling.
pub trait Clock: Send + Sync {
    fn now_millis(&self) -> i64;
    fn sleep_until(&self, millis: i64);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_millis(&self) -> i64 {
        now_millis()
    }

    fn sleep_until(&self, millis: i64) {
        let wait = millis - now_millis();
        if wait > 0 {
            std::thread::sleep(Duration::from_millis(wait as u64));
        }
    }
}

/// A clock that only moves when slept on. Backoff waits complete instantly.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: AtomicI64,
}

impl ManualClock {
    pub fn new(start: i64) -> Self {
        ManualClock {
            now: AtomicI64::new(start),
        }
    }

    pub fn advance(&self, by: Duration) {
        self.now.fetch_add(by.as_millis() as i64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_millis(&self) -> i64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_until(&self, millis: i64) {
        self.now.fetch_max(millis, Ordering::SeqCst);
    }
}

pub struct Pipeline {
    store: Arc<Store>,
    stance: Arc<dyn StanceBackend>,
    quality: Arc<dyn QualityBackend>,
    weights: Arc<WeightVector>,
    policy: RetryPolicy,
    clock: Arc<dyn Clock>,
    in_flight: Mutex<HashSet<JobId>>,
    wake: (Mutex<u64>, Condvar),
}

struct Claim<'a> {
    pipeline: &'a Pipeline,
    job: JobId,
}

impl Drop for Claim<'_> {
    fn drop(&mut self) {
        self.pipeline.in_flight.lock().unwrap().remove(&self.job);
    }
}

impl Pipeline {
    pub fn new(
        store: Arc<Store>,
        stance: Arc<dyn StanceBackend>,
        quality: Arc<dyn QualityBackend>,
        weights: Arc<WeightVector>,
    ) -> Self {
        Pipeline {
            store,
            stance,
            quality,
            weights,
            policy: RetryPolicy::default(),
            clock: Arc::new(SystemClock),
            in_flight: Mutex::new(HashSet::new()),
            wake: (Mutex::new(0), Condvar::new()),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    /// Event handler: makes sure the comment has its one job. Duplicate
    /// events return the existing job.
    pub fn on_comment_created(&self, comment: CommentId) -> Result<ScoringJob> {
        let job = self.store.ensure_job(comment)?;
        self.notify();
        Ok(job)
    }

    /// Wakes idle workers.
    pub fn notify(&self) {
        let (lock, cv) = &self.wake;
        *lock.lock().unwrap() += 1;
        cv.notify_all();
    }

    pub fn counts(&self) -> Result<JobCounts> {
        self.store.job_counts()
    }

    pub fn backends_healthy(&self) -> bool {
        self.stance.healthy() && self.quality.healthy()
    }

    fn claim(&self, job: JobId) -> Option<Claim<'_>> {
        // The guard must be released before a Claim can exist: dropping
        // one locks the set again.
        let inserted = self.in_flight.lock().unwrap().insert(job);
        inserted.then(|| Claim { pipeline: self, job })
    }

    fn in_flight_snapshot(&self) -> HashSet<JobId> {
        self.in_flight.lock().unwrap().clone()
    }

    fn score(&self, job: &ScoringJob) -> Result<Result<ScoreResult, ScoringError>> {
        let (comment, debate) = self.store.job_context(job)?;
        let outcome = match job.kind {
            JobKind::Stance => {
                stance::predict_stance(comment.comment_id, &debate.question, &comment.body, self.stance.as_ref())
                    .map(ScoreResult::Stance)
            }
            JobKind::Quality => quality::score_comment(&comment, &self.weights, self.quality.as_ref())
                .map(ScoreResult::Quality),
        };
        Ok(outcome)
    }

    /// One attempt at a job. Done jobs are recomputed and rewritten without
    /// touching the job row; permanently failed jobs are left alone.
    pub fn process_job(&self, job_id: JobId) -> Result<ScoringJob> {
        let job = self.store.job(job_id)?;
        match job.state {
            JobState::FailedPermanent => Ok(job),
            JobState::Done => match self.score(&job)? {
                Ok(result) => self.store.complete_job(job_id, &result),
                Err(err) => {
                    log::warn!("rescoring done job {job_id} failed: {err}");
                    Ok(job)
                }
            },
            JobState::Pending => match self.score(&job)? {
                Ok(result) => self.store.complete_job(job_id, &result),
                Err(err) => {
                    log::debug!("job {job_id} attempt {} failed: {err}", job.attempts + 1);
                    self.store.fail_job(
                        job_id,
                        err.is_retriable(),
                        &err.to_string(),
                        self.clock.now_millis(),
                        &self.policy,
                    )
                }
            },
        }
    }

    /// Runs one due job, if any. Returns the job's state before and after.
    fn run_one(&self) -> Result<Option<(ScoringJob, ScoringJob)>> {
        let now = self.clock.now_millis();
        let Some(job) = self.store.next_runnable_job(now, &self.in_flight_snapshot())? else {
            return Ok(None);
        };
        let Some(_claim) = self.claim(job.job_id) else {
            return Ok(Some((job.clone(), job)));
        };
        // Another worker may have finished it between the read and the claim.
        let before = self.store.job(job.job_id)?;
        if before.state != JobState::Pending {
            return Ok(Some((before.clone(), before)));
        }
        let after = self.process_job(job.job_id)?;
        Ok(Some((before, after)))
    }

    /// Processes until no pending job is left, honoring backoff through the
    /// pipeline clock. Counts only jobs this call brought to a final state.
    pub fn drain(&self) -> Result<DrainStats> {
        let mut stats = DrainStats::default();
        loop {
            if let Some((before, after)) = self.run_one()? {
                if before.state == JobState::Pending {
                    match after.state {
                        JobState::Done => stats.processed += 1,
                        JobState::FailedPermanent => stats.failed += 1,
                        JobState::Pending => {}
                    }
                }
                continue;
            }
            let in_flight = self.in_flight_snapshot();
            match self.store.next_due_time(&in_flight)? {
                Some(due) => self.clock.sleep_until(due),
                None if in_flight.is_empty() => break,
                // Another worker holds the last jobs; wait for it.
                None => std::thread::sleep(Duration::from_millis(2)),
            }
        }
        Ok(stats)
    }

    /// Re-runs every done job. Used to check idempotency.
    pub fn reprocess_done(&self) -> Result<usize> {
        let mut n = 0;
        for job in self.store.jobs()? {
            if job.state == JobState::Done {
                self.process_job(job.job_id)?;
                n += 1;
            }
        }
        Ok(n)
    }

    /// Starts `n` background worker threads. They stop when the returned
    /// handle is dropped.
    pub fn spawn_workers(self: &Arc<Self>, n: usize) -> Workers {
        let stop = Arc::new(AtomicBool::new(false));
        let handles = (0..n.max(1))
            .map(|i| {
                let pipeline = Arc::clone(self);
                let stop = Arc::clone(&stop);
                std::thread::Builder::new()
                    .name(format!("scoring-worker-{i}"))
                    .spawn(move || pipeline.worker_loop(&stop))
                    .expect("spawn scoring worker")
            })
            .collect();
        Workers {
            pipeline: Arc::clone(self),
            stop,
            handles,
        }
    }

    fn worker_loop(&self, stop: &AtomicBool) {
        const IDLE: Duration = Duration::from_millis(500);
        while !stop.load(Ordering::SeqCst) {
            let (lock, cv) = &self.wake;
            let seen = *lock.lock().unwrap();
            match self.run_one() {
                Ok(Some(_)) => continue,
                Ok(None) => {}
                Err(e) => log::error!("scoring worker: {e}"),
            }
            let wait = match self.store.next_due_time(&self.in_flight_snapshot()) {
                Ok(Some(due)) => {
                    let ms = (due - self.clock.now_millis()).clamp(1, IDLE.as_millis() as i64);
                    Duration::from_millis(ms as u64)
                }
                _ => IDLE,
            };
            let guard = lock.lock().unwrap();
            if *guard == seen && !stop.load(Ordering::SeqCst) {
                let _ = cv.wait_timeout(guard, wait).unwrap();
            }
        }
    }
}

pub struct Workers {
    pipeline: Arc<Pipeline>,
    stop: Arc<AtomicBool>,
    handles: Vec<JoinHandle<()>>,
}

impl Workers {
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.pipeline.notify();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}

impl Drop for Workers {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}
