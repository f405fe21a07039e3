//! Scores through an HTTP model server. A small in-process server fails the
//! first two quality requests with 503; the pipeline retries with backoff on
//! a manual clock, so the waits take no real time.
//!
//! ```text
//! cargo run --example remote_backends
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use deliberate::backend::{QualityRequest, QualityResponse, RemoteConfig, RemoteScorer, StanceRequest, StanceResponse};
use deliberate::domain::{ModuleKind, NewComment, NewDebate, StanceLabel, WeightVector, INDICATOR_COUNT};
use deliberate::pipeline::{Clock, ManualClock, Pipeline};
use deliberate::store::Store;

fn model_server(failures: usize) -> Router {
    let calls = Arc::new(AtomicUsize::new(0));
    Router::new()
        .route(
            "/stance",
            post(|Json(req): Json<StanceRequest>| async move {
                let p_favor = if req.body.contains("support") { 0.9 } else { 0.2 };
                Json(StanceResponse {
                    label: if p_favor > 0.5 { StanceLabel::InFavor } else { StanceLabel::Against },
                    p_favor,
                    model_version: "demo-stance-1".into(),
                })
            }),
        )
        .route(
            "/quality",
            post(move |Json(_req): Json<QualityRequest>| {
                let n = calls.fetch_add(1, Ordering::SeqCst);
                async move {
                    if n < failures {
                        return Err(StatusCode::SERVICE_UNAVAILABLE);
                    }
                    Ok(Json(QualityResponse {
                        predictions: vec![0.5; INDICATOR_COUNT],
                        model_version: "demo-quality-1".into(),
                    }))
                }
            }),
        )
        .route("/health", get(|| async { "ok" }))
}

fn main() -> deliberate::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let url = format!("http://{}", listener.local_addr()?);
    rt.spawn(async move { axum::serve(listener, model_server(2)).await });

    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path())?);
    let remote = Arc::new(RemoteScorer::new(RemoteConfig::new(&url)));
    let clock = Arc::new(ManualClock::new(0));
    let pipeline = Pipeline::new(Arc::clone(&store), remote.clone(), remote, Arc::new(WeightVector::placeholder()))
        .with_clock(clock.clone());
    println!("model server at {url}, healthy: {}", pipeline.backends_healthy());

    let author = store.create_participant("ru", "token-ru")?;
    let rec = store.create_debate(&NewDebate::new("Open borders?", ModuleKind::Recommendation), Default::default())?;
    let qual = store.create_debate(&NewDebate::new("Longer recess?", ModuleKind::Quality), Default::default())?;
    let (a, _) = store.append_comment_with_event(&NewComment::new(rec.debate_id, author.participant_id, "I support it"))?;
    let (b, _) = store.append_comment_with_event(&NewComment::new(qual.debate_id, author.participant_id, "Kids need it"))?;

    pipeline.drain()?;
    for id in [a.comment_id, b.comment_id] {
        let job = store.job_for_comment(id)?.expect("every comment has a job");
        println!(
            "comment {}: {} job {} after {} attempts (last error: {})",
            id,
            job.kind.as_str(),
            job.state.as_str(),
            job.attempts,
            job.last_error.as_deref().unwrap_or("none")
        );
    }
    println!("backoff waited {} ms of manual time", clock.now_millis());
    let stance = store.comment_stance(a.comment_id)?.expect("scored");
    let quality = store.quality_score(b.comment_id)?.expect("scored");
    println!("stance {} from {}", stance.label.as_str(), stance.model_version);
    println!("quality {:.3} with weights {}", quality.normalized, quality.weights_version);
    Ok(())
}
