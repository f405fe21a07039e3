//! Opens a quality debate, lets the pipeline score its comments and prints
//! the highlighted top comments next to the full ranking.
//!
//! ```text
//! cargo run --example top_comments
//! ```

use std::sync::Arc;

use deliberate::backend::{HeuristicQuality, HeuristicStance};
use deliberate::domain::{ModuleKind, NewComment, NewDebate, WeightVector};
use deliberate::pipeline::Pipeline;
use deliberate::quality::select_top_comments;
use deliberate::store::Store;

fn main() -> deliberate::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path())?);
    let pipeline = Pipeline::new(
        Arc::clone(&store),
        Arc::new(HeuristicStance::default()),
        Arc::new(HeuristicQuality::default()),
        Arc::new(WeightVector::placeholder()),
    );

    let debate = store.create_debate(
        &NewDebate::new("How should the library spend its budget?", ModuleKind::Quality)
            .with_top_k(2)
            .with_threshold(1.5),
        Default::default(),
    )?;
    let author = store.create_participant("li", "token-li")?;
    for body in [
        "More books.",
        "I propose longer opening hours because students need a quiet place after school.",
        "As @sam pointed out, e-books are cheaper. I suggest we shift part of the budget, since demand is growing.",
        "Sure, buy more chairs, that will fix everything.",
        "We should fund the reading club.",
        "Whatever.",
    ] {
        store.append_comment_with_event(&NewComment::new(debate.debate_id, author.participant_id, body))?;
    }
    pipeline.drain()?;

    let snapshot = store.debate_snapshot(debate.debate_id)?;
    let top = select_top_comments(&snapshot.debate, &snapshot.scores);
    println!(
        "top_k {} threshold {}: {} highlighted",
        snapshot.debate.top_k,
        snapshot.debate.threshold,
        top.len()
    );
    for comment in &snapshot.comments {
        let score = snapshot
            .scores
            .iter()
            .find(|s| s.score.comment_id == comment.comment_id)
            .map(|s| s.score.normalized)
            .unwrap_or(f64::NAN);
        let mark = if top.contains(&comment.comment_id) { "*" } else { " " };
        println!("{mark} {score:.3}  {:?}", comment.body);
    }
    Ok(())
}
