//! HTTP service: configuration, authentication and the JSON routes.
//!
//! Participants obtain a bearer token from `POST /api/sessions`; admin
//! routes take the configured auth secret as their bearer token. Request and
//! response bodies are the serde encodings of the [`crate::domain`] types.
//!
//! | method | path | caller |
//! |---|---|---|
//! | POST | `/api/sessions` | anyone |
//! | GET | `/api/health` | anyone |
//! | POST | `/api/debates` | admin |
//! | GET | `/api/debates`, `/api/debates/{id}` | any token |
//! | POST, GET | `/api/debates/{id}/comments` | participant / any token |
//! | PUT, GET | `/api/debates/{id}/stance` | participant |
//! | GET | `/api/debates/{id}/recommendation` | participant |
//! | POST | `/api/debates/{id}/recommendation/next` | participant |
//! | POST | `/api/suggestions/{id}/reply` | participant |
//! | GET | `/api/comments/{id}/score` | any token |
//! | GET | `/api/debates/{id}/top` | any token |
//! | GET | `/api/admin/debates/{id}/uncertain` | admin |
//! | POST, GET | `/api/admin/labeled-examples` | admin |

mod config;
mod routes;

use std::future::Future;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{BackendKind, ServiceConfig};
pub use routes::{
    CommentListing, HealthReport, ListedComment, RecommendationResponse, ReplyResponse, ScoreStatus, ScoreView,
    SessionResponse, TopComment, TopListing, UncertainComment,
};

use crate::domain::{ModuleKind, Participant};
use crate::error::{Error, Result};
use crate::pipeline::Pipeline;
use crate::recommend::Recommender;
use crate::store::{DebateDefaults, Store};

pub(crate) struct AppState {
    pub store: Arc<Store>,
    pub pipeline: Arc<Pipeline>,
    pub recommender: Recommender,
    pub defaults: DebateDefaults,
    pub modules: Vec<ModuleKind>,
    auth_secret: String,
}

/// Who is calling a route.
pub(crate) enum Caller {
    Admin,
    Participant(Participant),
}

impl AppState {
    pub fn authenticate(&self, bearer: Option<&str>) -> Result<Caller> {
        let token = bearer.ok_or_else(|| Error::Unauthorized("missing bearer token".into()))?;
        if constant_time_eq(token.as_bytes(), self.auth_secret.as_bytes()) {
            return Ok(Caller::Admin);
        }
        self.store
            .participant_by_token(token)?
            .map(Caller::Participant)
            .ok_or_else(|| Error::Unauthorized("unknown token".into()))
    }

    pub fn participant(&self, bearer: Option<&str>) -> Result<Participant> {
        match self.authenticate(bearer)? {
            Caller::Participant(p) => Ok(p),
            Caller::Admin => Err(Error::Forbidden("this route needs a participant token".into())),
        }
    }

    pub fn admin(&self, bearer: Option<&str>) -> Result<()> {
        match self.authenticate(bearer)? {
            Caller::Admin => Ok(()),
            Caller::Participant(_) => Err(Error::Forbidden("admin only".into())),
        }
    }

    /// `hex(sha256(secret ":" nonce))` for a fresh 128-bit nonce.
    pub fn issue_token(&self) -> String {
        let nonce: [u8; 16] = rand::random();
        let mut h = Sha256::new();
        h.update(self.auth_secret.as_bytes());
        h.update(b":");
        h.update(nonce);
        hex::encode(h.finalize())
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// A configured service. Build it, then either take its [`Self::router`] or
/// run it with [`Self::serve`].
pub struct Service {
    state: Arc<AppState>,
    workers: usize,
}

impl Service {
    /// Validates the config, opens the store and loads backends and weights.
    pub fn build(config: &ServiceConfig) -> Result<Self> {
        config.validate()?;
        let weights = Arc::new(config.load_weights()?);
        let stance = config.stance_backend()?;
        let quality = config.quality_backend()?;
        let store = Arc::new(
            Store::open(&config.data_dir).map_err(|e| Error::config("data_dir", e.to_string()))?,
        );
        let pipeline = Arc::new(Pipeline::new(Arc::clone(&store), stance, quality, weights));
        Ok(Self::from_parts(pipeline, config))
    }

    /// Wraps an existing pipeline, e.g. one with a test clock. Backend and
    /// weight settings of `config` are ignored.
    pub fn from_parts(pipeline: Arc<Pipeline>, config: &ServiceConfig) -> Self {
        let store = Arc::clone(pipeline.store());
        Service {
            state: Arc::new(AppState {
                recommender: Recommender::new(Arc::clone(&store), config.seed),
                store,
                pipeline,
                defaults: config.debate_defaults(),
                modules: config.modules.clone(),
                auth_secret: config.auth_secret.clone(),
            }),
            workers: config.workers,
        }
    }

    pub fn pipeline(&self) -> &Arc<Pipeline> {
        &self.state.pipeline
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.state.store
    }

    pub fn router(&self) -> axum::Router {
        routes::router(Arc::clone(&self.state))
    }

    /// Serves on `listener` with the configured number of scoring workers
    /// until `shutdown` resolves.
    pub async fn serve(
        self,
        listener: tokio::net::TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> Result<()> {
        let workers = (self.workers > 0).then(|| self.state.pipeline.spawn_workers(self.workers));
        let app = self.router();
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
        if let Some(w) = workers {
            tokio::task::spawn_blocking(move || w.shutdown())
                .await
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

/// Error code and HTTP status of an [`Error`].
pub fn error_status(err: &Error) -> (StatusCode, &'static str) {
    match err {
        Error::Validation(_) | Error::Parse { .. } => (StatusCode::BAD_REQUEST, "invalid_input"),
        Error::Unauthorized(_) => (StatusCode::UNAUTHORIZED, "unauthorized"),
        Error::Forbidden(_) => (StatusCode::FORBIDDEN, "forbidden"),
        Error::NotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
        Error::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
        Error::UnsupportedModule { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_module"),
        Error::StanceRequired(_) => (StatusCode::PRECONDITION_REQUIRED, "stance_required"),
        Error::Scoring(_) => (StatusCode::BAD_GATEWAY, "scoring_failed"),
        Error::Config { .. } | Error::Store(_) | Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

pub(crate) struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = error_status(&self.0);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        let body = ErrorBody {
            error: code,
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}
