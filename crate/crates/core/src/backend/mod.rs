//! Scoring backends: the stance classifier and the quality indicator models.
//!
//! Both come in a deterministic marker-rule flavor and a remote flavor that
//! talks to an external scorer over HTTP.

mod remote;

pub use remote::{RemoteConfig, RemoteScorer, StanceRequest, StanceResponse, QualityRequest, QualityResponse};

use crate::domain::{StanceLabel, INDICATOR_COUNT};
use crate::error::ScoringError;
use crate::quality::{self, IndicatorRuleSet};
use crate::stance::{self, StanceRuleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct StancePrediction {
    pub label: StanceLabel,
    pub p_favor: f64,
    pub model_version: String,
}

pub trait StanceBackend: Send + Sync {
    fn predict(&self, question: &str, body: &str) -> Result<StancePrediction, ScoringError>;

    /// Whether the backend is reachable right now.
    fn healthy(&self) -> bool {
        true
    }
}

pub trait QualityBackend: Send + Sync {
    /// One prediction in `[0, 1]` per indicator.
    fn predict(&self, body: &str) -> Result<Vec<f64>, ScoringError>;

    fn healthy(&self) -> bool {
        true
    }
}

pub const HEURISTIC_STANCE_VERSION: &str = "stance-markers-1";

#[derive(Debug, Clone, Default)]
pub struct HeuristicStance {
    rules: StanceRuleSet,
}

impl HeuristicStance {
    pub fn new(rules: StanceRuleSet) -> Self {
        HeuristicStance { rules }
    }

    pub fn rules(&self) -> &StanceRuleSet {
        &self.rules
    }
}

impl StanceBackend for HeuristicStance {
    fn predict(&self, _question: &str, body: &str) -> Result<StancePrediction, ScoringError> {
        let p_favor = stance::heuristic_p_favor(body, &self.rules);
        Ok(StancePrediction {
            label: StanceLabel::from_p_favor(p_favor),
            p_favor,
            model_version: HEURISTIC_STANCE_VERSION.to_string(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct HeuristicQuality {
    rules: IndicatorRuleSet,
}

impl HeuristicQuality {
    pub fn new(rules: IndicatorRuleSet) -> Self {
        HeuristicQuality { rules }
    }

    pub fn rules(&self) -> &IndicatorRuleSet {
        &self.rules
    }
}

impl QualityBackend for HeuristicQuality {
    fn predict(&self, body: &str) -> Result<Vec<f64>, ScoringError> {
        let p: [f64; INDICATOR_COUNT] = quality::predict_indicators(body, &self.rules);
        Ok(p.to_vec())
    }
}

impl<T: StanceBackend + ?Sized> StanceBackend for std::sync::Arc<T> {
    fn predict(&self, question: &str, body: &str) -> Result<StancePrediction, ScoringError> {
        (**self).predict(question, body)
    }

    fn healthy(&self) -> bool {
        (**self).healthy()
    }
}

impl<T: QualityBackend + ?Sized> QualityBackend for std::sync::Arc<T> {
    fn predict(&self, body: &str) -> Result<Vec<f64>, ScoringError> {
        (**self).predict(body)
    }

    fn healthy(&self) -> bool {
        (**self).healthy()
    }
}
