use std::collections::HashSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ApiError, AppState};
use crate::domain::{
    Comment, CommentId, Debate, DebateId, ModuleKind, NewComment, NewDebate, ParticipantId, QualityScore,
    StanceLabel, StanceRecord, Suggestion, SuggestionId,
};
use crate::error::{Error, Result};
use crate::pipeline::{JobKind, JobState};
use crate::quality::select_top_comments;
use crate::stance::{rank_uncertain, OriginFilter};
use crate::store::IngestReport;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = std::result::Result<T, ApiError>;

pub(crate) fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/debates", post(create_debate).get(list_debates))
        .route("/api/debates/{id}", get(get_debate))
        .route("/api/debates/{id}/comments", post(post_comment).get(list_comments))
        .route("/api/debates/{id}/stance", get(get_stance).put(put_stance))
        .route("/api/debates/{id}/recommendation", get(get_recommendation))
        .route("/api/debates/{id}/recommendation/next", post(next_recommendation))
        .route("/api/debates/{id}/top", get(top_comments))
        .route("/api/suggestions/{id}/reply", post(reply))
        .route("/api/comments/{id}/score", get(comment_score))
        .route("/api/admin/debates/{id}/uncertain", get(uncertain))
        .route("/api/admin/labeled-examples", post(import_labeled).get(export_labeled))
        .fallback(|| async { ApiError(Error::NotFound { kind: "route", id: 0 }) })
        .with_state(state)
}

/// Runs store work off the async executor.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::Io(std::io::Error::other(e))))?
        .map_err(ApiError)
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(|t| t.trim().to_string())
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::validation(format!("request body: {e}")))
}

fn created<T: Serialize>(value: T) -> Response {
    (StatusCode::CREATED, Json(value)).into_response()
}

// Wire types.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub participant_id: ParticipantId,
    pub display_name: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListedComment {
    #[serde(flatten)]
    pub comment: Comment,
    pub is_top: bool,
}

/// Comments in display order: for quality debates the top comments first,
/// then the rest chronologically; otherwise chronological.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentListing {
    pub debate_id: DebateId,
    pub module_kind: ModuleKind,
    pub comments: Vec<ListedComment>,
}

/// `suggestion` and `comment` are both null when no opposing comment is left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub suggestion: Option<Suggestion>,
    pub comment: Option<Comment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyResponse {
    pub comment: Comment,
    pub suggestion: Suggestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreStatus {
    Pending,
    Scored,
    Unscorable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreView {
    pub comment_id: CommentId,
    pub kind: JobKind,
    pub status: ScoreStatus,
    pub attempts: u32,
    pub last_error: Option<String>,
    pub stance: Option<StanceRecord>,
    pub quality: Option<QualityScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopComment {
    #[serde(flatten)]
    pub comment: Comment,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopListing {
    pub debate_id: DebateId,
    pub top_k: u32,
    pub threshold: f64,
    pub comments: Vec<TopComment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainComment {
    pub comment_id: CommentId,
    pub body: String,
    pub label: StanceLabel,
    pub p_favor: f64,
    pub margin: f64,
    pub model_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthReport {
    pub status: String,
    pub store_ok: bool,
    pub backend_ok: bool,
    pub jobs_pending: u64,
    pub jobs_done: u64,
    pub jobs_failed: u64,
}

#[derive(Deserialize)]
struct SessionRequest {
    display_name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommentRequest {
    body: String,
    #[serde(default)]
    parent_id: Option<CommentId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StanceRequest {
    label: StanceLabel,
}

#[derive(Serialize)]
struct StanceView {
    stance: Option<StanceRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplyRequest {
    body: String,
}

#[derive(Deserialize)]
struct UncertainQuery {
    limit: Option<usize>,
}

#[derive(Deserialize)]
struct ExportQuery {
    origin: Option<String>,
}

// Handlers.

async fn health(State(s): Shared) -> ApiResult<Response> {
    let report = blocking(move || {
        let store_ok = s.store.ping();
        let backend_ok = s.pipeline.backends_healthy();
        let counts = s.pipeline.counts().unwrap_or_default();
        let ok = store_ok && backend_ok;
        Ok(HealthReport {
            status: if ok { "ok" } else { "degraded" }.to_string(),
            store_ok,
            backend_ok,
            jobs_pending: counts.pending,
            jobs_done: counts.done,
            jobs_failed: counts.failed,
        })
    })
    .await?;
    let status = if report.status == "ok" {
        StatusCode::OK
    } else {
        StatusCode::SERVICE_UNAVAILABLE
    };
    Ok((status, Json(report)).into_response())
}

async fn create_session(State(s): Shared, body: Bytes) -> ApiResult<Response> {
    let session = blocking(move || {
        let req: SessionRequest = parse(&body)?;
        let token = s.issue_token();
        let p = s.store.create_participant(req.display_name.trim(), &token)?;
        Ok(SessionResponse {
            participant_id: p.participant_id,
            display_name: p.display_name,
            token,
        })
    })
    .await?;
    Ok(created(session))
}

async fn create_debate(State(s): Shared, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let token = bearer(&headers);
    let debate = blocking(move || {
        s.admin(token.as_deref())?;
        let new: NewDebate = parse(&body)?;
        if !s.modules.contains(&new.module_kind) {
            return Err(Error::validation(format!(
                "the {} module is not enabled on this service",
                new.module_kind
            )));
        }
        s.store.create_debate(&new, s.defaults)
    })
    .await?;
    Ok(created(debate))
}

async fn list_debates(State(s): Shared, headers: HeaderMap) -> ApiResult<Json<Vec<Debate>>> {
    let token = bearer(&headers);
    blocking(move || {
        s.authenticate(token.as_deref())?;
        s.store.debates()
    })
    .await
    .map(Json)
}

async fn get_debate(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>) -> ApiResult<Json<Debate>> {
    let token = bearer(&headers);
    blocking(move || {
        s.authenticate(token.as_deref())?;
        s.store.debate(DebateId(id))
    })
    .await
    .map(Json)
}

async fn post_comment(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>, body: Bytes) -> ApiResult<Response> {
    let token = bearer(&headers);
    let comment = blocking(move || {
        let author = s.participant(token.as_deref())?;
        let req: CommentRequest = parse(&body)?;
        let mut new = NewComment::new(DebateId(id), author.participant_id, req.body);
        if let Some(parent) = req.parent_id {
            new = new.reply_to(parent);
        }
        let (comment, _job) = s.store.append_comment_with_event(&new)?;
        s.pipeline.notify();
        Ok(comment)
    })
    .await?;
    Ok(created(comment))
}

/// Display order of a debate's comments.
pub(crate) fn listing(s: &AppState, debate: DebateId) -> Result<CommentListing> {
    let snap = s.store.debate_snapshot(debate)?;
    let top = match snap.debate.module_kind {
        ModuleKind::Quality => select_top_comments(&snap.debate, &snap.scores),
        ModuleKind::Recommendation => Vec::new(),
    };
    let top_set: HashSet<CommentId> = top.iter().copied().collect();
    let mut by_id: std::collections::HashMap<CommentId, Comment> =
        snap.comments.iter().map(|c| (c.comment_id, c.clone())).collect();
    let mut comments: Vec<ListedComment> = top
        .iter()
        .filter_map(|id| by_id.remove(id))
        .map(|comment| ListedComment { comment, is_top: true })
        .collect();
    comments.extend(
        snap.comments
            .into_iter()
            .filter(|c| !top_set.contains(&c.comment_id))
            .map(|comment| ListedComment { comment, is_top: false }),
    );
    Ok(CommentListing {
        debate_id: snap.debate.debate_id,
        module_kind: snap.debate.module_kind,
        comments,
    })
}

async fn list_comments(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>) -> ApiResult<Json<CommentListing>> {
    let token = bearer(&headers);
    blocking(move || {
        s.authenticate(token.as_deref())?;
        listing(&s, DebateId(id))
    })
    .await
    .map(Json)
}

async fn put_stance(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<i64>,
    body: Bytes,
) -> ApiResult<Json<StanceRecord>> {
    let token = bearer(&headers);
    blocking(move || {
        let p = s.participant(token.as_deref())?;
        let req: StanceRequest = parse(&body)?;
        s.recommender.declare_stance(p.participant_id, DebateId(id), req.label)
    })
    .await
    .map(Json)
}

async fn get_stance(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>) -> ApiResult<Response> {
    let token = bearer(&headers);
    let view = blocking(move || {
        let p = s.participant(token.as_deref())?;
        s.store.debate(DebateId(id))?;
        Ok(StanceView {
            stance: s.recommender.declared_stance(p.participant_id, DebateId(id))?,
        })
    })
    .await?;
    Ok(Json(view).into_response())
}

fn recommendation_response(s: &AppState, suggestion: Option<Suggestion>) -> Result<RecommendationResponse> {
    let comment = suggestion.as_ref().map(|x| s.store.comment(x.comment_id)).transpose()?;
    Ok(RecommendationResponse { suggestion, comment })
}

async fn get_recommendation(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<i64>,
) -> ApiResult<Json<RecommendationResponse>> {
    let token = bearer(&headers);
    blocking(move || {
        let p = s.participant(token.as_deref())?;
        let suggestion = s.recommender.current_or_suggest(p.participant_id, DebateId(id))?;
        recommendation_response(&s, suggestion)
    })
    .await
    .map(Json)
}

async fn next_recommendation(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<i64>,
) -> ApiResult<Json<RecommendationResponse>> {
    let token = bearer(&headers);
    blocking(move || {
        let p = s.participant(token.as_deref())?;
        let suggestion = s.recommender.next_suggestion(p.participant_id, DebateId(id))?;
        recommendation_response(&s, suggestion)
    })
    .await
    .map(Json)
}

async fn reply(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>, body: Bytes) -> ApiResult<Response> {
    let token = bearer(&headers);
    let out = blocking(move || {
        let p = s.participant(token.as_deref())?;
        let req: ReplyRequest = parse(&body)?;
        let (comment, _job, suggestion) = s.recommender.record_reply(SuggestionId(id), p.participant_id, &req.body)?;
        s.pipeline.notify();
        Ok(ReplyResponse { comment, suggestion })
    })
    .await?;
    Ok(created(out))
}

async fn comment_score(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>) -> ApiResult<Json<ScoreView>> {
    let token = bearer(&headers);
    blocking(move || {
        s.authenticate(token.as_deref())?;
        let comment = s.store.comment(CommentId(id))?;
        let job = s.store.job_for_comment(comment.comment_id)?.ok_or(Error::NotFound {
            kind: "scoring job for comment",
            id,
        })?;
        let status = match job.state {
            JobState::Pending => ScoreStatus::Pending,
            JobState::Done => ScoreStatus::Scored,
            JobState::FailedPermanent => ScoreStatus::Unscorable,
        };
        let (stance, quality) = match job.kind {
            JobKind::Stance => (s.store.comment_stance(comment.comment_id)?, None),
            JobKind::Quality => (None, s.store.quality_score(comment.comment_id)?),
        };
        Ok(ScoreView {
            comment_id: comment.comment_id,
            kind: job.kind,
            status,
            attempts: job.attempts,
            last_error: job.last_error,
            stance,
            quality,
        })
    })
    .await
    .map(Json)
}

async fn top_comments(State(s): Shared, headers: HeaderMap, Path(id): Path<i64>) -> ApiResult<Json<TopListing>> {
    let token = bearer(&headers);
    blocking(move || {
        s.authenticate(token.as_deref())?;
        let snap = s.store.debate_snapshot(DebateId(id))?;
        if snap.debate.module_kind != ModuleKind::Quality {
            return Err(Error::UnsupportedModule {
                debate: snap.debate.debate_id,
                kind: snap.debate.module_kind,
            });
        }
        let top = select_top_comments(&snap.debate, &snap.scores);
        let comments = top
            .iter()
            .filter_map(|cid| {
                let comment = snap.comments.iter().find(|c| c.comment_id == *cid)?.clone();
                let score = snap.scores.iter().find(|x| x.score.comment_id == *cid)?;
                Some(TopComment {
                    comment,
                    normalized: score.score.normalized,
                })
            })
            .collect();
        Ok(TopListing {
            debate_id: snap.debate.debate_id,
            top_k: snap.debate.top_k,
            threshold: snap.debate.threshold,
            comments,
        })
    })
    .await
    .map(Json)
}

async fn uncertain(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<i64>,
    Query(q): Query<UncertainQuery>,
) -> ApiResult<Json<Vec<UncertainComment>>> {
    let token = bearer(&headers);
    blocking(move || {
        s.admin(token.as_deref())?;
        let debate = s.store.debate(DebateId(id))?;
        if debate.module_kind != ModuleKind::Recommendation {
            return Err(Error::UnsupportedModule {
                debate: debate.debate_id,
                kind: debate.module_kind,
            });
        }
        let ranked = rank_uncertain(s.store.predicted_stances(debate.debate_id)?);
        Ok(ranked
            .into_iter()
            .take(q.limit.unwrap_or(usize::MAX))
            .map(|(comment, record)| UncertainComment {
                comment_id: comment.comment_id,
                body: comment.body,
                label: record.label,
                margin: record.margin(),
                p_favor: record.p_favor,
                model_version: record.model_version,
            })
            .collect())
    })
    .await
    .map(Json)
}

async fn import_labeled(State(s): Shared, headers: HeaderMap, body: Bytes) -> ApiResult<Json<IngestReport>> {
    let token = bearer(&headers);
    blocking(move || {
        s.admin(token.as_deref())?;
        let text = std::str::from_utf8(&body).map_err(|e| Error::validation(format!("body is not UTF-8: {e}")))?;
        s.store.ingest_labeled_file(text)
    })
    .await
    .map(Json)
}

async fn export_labeled(State(s): Shared, headers: HeaderMap, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let token = bearer(&headers);
    let text = blocking(move || {
        s.admin(token.as_deref())?;
        let filter: OriginFilter = q.origin.as_deref().unwrap_or("all").parse()?;
        s.store.export_labeled(filter)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}
