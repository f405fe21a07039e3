//! HTTP client for externally hosted scorers.
//!
//! Wire protocol, JSON bodies:
//!
//! - `POST {base}/stance` with `{"question", "body"}` answers
//!   `{"label", "p_favor", "model_version"}`.
//! - `POST {base}/quality` with `{"body"}` answers
//!   `{"predictions": [20 floats], "model_version"}`.
//! - `GET {base}/health` is probed for reachability; any HTTP answer counts.
//!
//! 2xx is success, 4xx is permanent, 5xx and transport failures (including
//! the per-request timeout) are retriable. A 2xx whose body does not decode
//! or violates the value ranges is permanent.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{QualityBackend, StanceBackend, StancePrediction};
use crate::domain::{StanceLabel, INDICATOR_COUNT};
use crate::error::ScoringError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StanceRequest {
    pub question: String,
    pub body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StanceResponse {
    pub label: StanceLabel,
    pub p_favor: f64,
    pub model_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QualityRequest {
    pub body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QualityResponse {
    pub predictions: Vec<f64>,
    pub model_version: String,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Upper bound on concurrent in-flight requests.
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteConfig {
            base_url: base_url.into(),
            timeout: Duration::from_secs(5),
            max_in_flight: 8,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Client for one remote scorer. Implements both backend traits; the same
/// base URL serves the stance and quality routes.
pub struct RemoteScorer {
    base_url: String,
    agent: ureq::Agent,
    limiter: Limiter,
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build();
        RemoteScorer {
            base_url: config.base_url.trim_end_matches('/').to_string(),
            agent: ureq::Agent::new_with_config(agent_config),
            limiter: Limiter::new(config.max_in_flight),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        route: &str,
        request: &Req,
    ) -> Result<Resp, ScoringError> {
        let _permit = self.limiter.acquire();
        let url = format!("{}/{route}", self.base_url);
        let mut response = self
            .agent
            .post(&url)
            .send_json(request)
            .map_err(|e| ScoringError::Retriable(format!("{url}: {e}")))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => response
                .body_mut()
                .read_json::<Resp>()
                .map_err(|e| ScoringError::Permanent(format!("{url}: undecodable response: {e}"))),
            400..=499 => Err(ScoringError::Permanent(format!("{url}: status {status}"))),
            _ => Err(ScoringError::Retriable(format!("{url}: status {status}"))),
        }
    }

    fn probe(&self) -> bool {
        self.agent
            .get(format!("{}/health", self.base_url))
            .call()
            .is_ok()
    }
}

impl StanceBackend for RemoteScorer {
    fn predict(&self, question: &str, body: &str) -> Result<StancePrediction, ScoringError> {
        let resp: StanceResponse = self.call(
            "stance",
            &StanceRequest {
                question: question.to_string(),
                body: body.to_string(),
            },
        )?;
        if !(0.0..=1.0).contains(&resp.p_favor) {
            return Err(ScoringError::Permanent(format!(
                "p_favor {} outside [0, 1]",
                resp.p_favor
            )));
        }
        if resp.label != StanceLabel::from_p_favor(resp.p_favor) {
            return Err(ScoringError::Permanent(format!(
                "label {} inconsistent with p_favor {}",
                resp.label, resp.p_favor
            )));
        }
        Ok(StancePrediction {
            label: resp.label,
            p_favor: resp.p_favor,
            model_version: resp.model_version,
        })
    }

    fn healthy(&self) -> bool {
        self.probe()
    }
}

impl QualityBackend for RemoteScorer {
    fn predict(&self, body: &str) -> Result<Vec<f64>, ScoringError> {
        let resp: QualityResponse = self.call(
            "quality",
            &QualityRequest {
                body: body.to_string(),
            },
        )?;
        if resp.predictions.len() != INDICATOR_COUNT {
            return Err(ScoringError::Permanent(format!(
                "expected {INDICATOR_COUNT} predictions, got {}",
                resp.predictions.len()
            )));
        }
        Ok(resp.predictions)
    }

    fn healthy(&self) -> bool {
        self.probe()
    }
}
