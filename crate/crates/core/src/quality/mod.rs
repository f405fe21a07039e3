//! Deliberative quality scoring.
//!
//! A comment gets one prediction per indicator in `[0, 1]`. The raw score is
//! the weighted sum of those predictions; the normalized score maps the raw
//! value affinely from the attainable range `[Σ min(w,0), Σ max(w,0)]` onto
//! `[0, 5]`. Top comments are the `top_k` best normalized scores at or above
//! the debate threshold.

mod rules;
mod weights_file;

use std::cmp::Ordering;

pub use rules::{IndicatorRule, IndicatorRuleSet, DEFAULT_GAIN};
pub use weights_file::{parse_weights, render_weights};

use crate::backend::QualityBackend;
use crate::domain::{Comment, CommentId, Debate, QualityScore, WeightVector, INDICATOR_COUNT, SCORE_MAX};
use crate::error::{Error, Result, ScoringError};
use crate::markers;

/// Marker-count predictions: `min(1, gain_k * occurrences_k)` per indicator.
pub fn predict_indicators(comment_body: &str, rules: &IndicatorRuleSet) -> [f64; INDICATOR_COUNT] {
    let lowered = comment_body.to_lowercase();
    let mut out = [0.0; INDICATOR_COUNT];
    for (slot, rule) in out.iter_mut().zip(rules.indicators()) {
        let hits: usize = rule
            .markers
            .iter()
            .map(|m| markers::count_lowercase(&lowered, m))
            .sum();
        *slot = (rule.gain * hits as f64).min(1.0);
    }
    out
}

/// Weighted sum of the predictions, accumulated left to right.
pub fn aqua_raw(weights: &WeightVector, predictions: &[f64]) -> Result<f64> {
    let w = weights.weights();
    if predictions.len() != w.len() {
        return Err(Error::config(
            "predictions",
            format!("expected {} predictions, got {}", w.len(), predictions.len()),
        ));
    }
    let mut total = 0.0;
    for (wk, fk) in w.iter().zip(predictions) {
        total += wk * fk;
    }
    Ok(total)
}

/// Smallest and largest raw score attainable with predictions in `[0, 1]`.
pub fn score_bounds(weights: &WeightVector) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &w in weights.weights() {
        lo += w.min(0.0);
        hi += w.max(0.0);
    }
    (lo, hi)
}

pub fn normalize(raw: f64, weights: &WeightVector) -> Result<f64> {
    let (lo, hi) = score_bounds(weights);
    let span = hi - lo;
    if span <= 0.0 || !span.is_finite() {
        return Err(Error::config("weights", "degenerate score range"));
    }
    Ok((SCORE_MAX * ((raw - lo) / span)).clamp(0.0, SCORE_MAX))
}

/// Runs the backend on a comment and folds its predictions into a score.
pub fn score_comment(
    comment: &Comment,
    weights: &WeightVector,
    backend: &dyn QualityBackend,
) -> Result<QualityScore, ScoringError> {
    let predictions = backend.predict(&comment.body)?;
    if predictions.len() != INDICATOR_COUNT {
        return Err(ScoringError::Permanent(format!(
            "backend returned {} predictions, expected {INDICATOR_COUNT}",
            predictions.len()
        )));
    }
    if let Some(p) = predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ScoringError::Permanent(format!(
            "backend prediction {p} outside [0, 1]"
        )));
    }
    let raw = aqua_raw(weights, &predictions).map_err(|e| ScoringError::Permanent(e.to_string()))?;
    let normalized = normalize(raw, weights).map_err(|e| ScoringError::Permanent(e.to_string()))?;
    Ok(QualityScore {
        comment_id: comment.comment_id,
        predictions,
        raw,
        normalized,
        weights_version: weights.version().to_string(),
    })
}

/// A stored score together with its comment's position in the debate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredComment {
    pub created_at: u64,
    pub score: QualityScore,
}

fn rank_order(a: &ScoredComment, b: &ScoredComment) -> Ordering {
    b.score
        .normalized
        .total_cmp(&a.score.normalized)
        .then(a.created_at.cmp(&b.created_at))
        .then(a.score.comment_id.cmp(&b.score.comment_id))
}

/// Top comments of a debate: scores `>= threshold`, best first, oldest
/// first among equals, at most `top_k`.
pub fn select_top_comments(debate: &Debate, scores: &[ScoredComment]) -> Vec<CommentId> {
    let mut eligible: Vec<&ScoredComment> = scores
        .iter()
        .filter(|s| s.score.normalized >= debate.threshold)
        .collect();
    eligible.sort_by(|a, b| rank_order(a, b));
    eligible
        .into_iter()
        .take(debate.top_k as usize)
        .map(|s| s.score.comment_id)
        .collect()
}
