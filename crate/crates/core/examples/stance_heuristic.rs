//! Predicts comment stances through the scoring pipeline, then lists the
//! comments whose prediction is least certain first, the order an annotator
//! would review them in.
//!
//! ```text
//! cargo run --example stance_heuristic
//! ```

use std::sync::Arc;

use deliberate::backend::{HeuristicQuality, HeuristicStance};
use deliberate::domain::{ModuleKind, NewComment, NewDebate, WeightVector};
use deliberate::pipeline::Pipeline;
use deliberate::stance::{heuristic_p_favor, rank_uncertain, StanceRuleSet};
use deliberate::store::Store;

fn main() -> deliberate::Result<()> {
    let rules = StanceRuleSet::default();
    for body in ["I support it", "I oppose it and I disagree", "Maybe?"] {
        println!("p_favor({body:?}) = {:.4}", heuristic_p_favor(body, &rules));
    }

    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path())?);
    let pipeline = Pipeline::new(
        Arc::clone(&store),
        Arc::new(HeuristicStance::new(rules)),
        Arc::new(HeuristicQuality::default()),
        Arc::new(WeightVector::placeholder()),
    );

    let debate = store.create_debate(
        &NewDebate::new("Should the city ban cars from the old town?", ModuleKind::Recommendation),
        Default::default(),
    )?;
    let author = store.create_participant("ana", "token-ana")?;
    for body in [
        "Yes. I support this, it is a good idea and I agree with the council.",
        "I oppose the ban; it is harmful to shop owners.",
        "Deliveries would need a plan, but I agree in principle.",
        "Not sure either way.",
        "I disagree with the ban, though I support fewer parking spots.",
    ] {
        store.append_comment_with_event(&NewComment::new(debate.debate_id, author.participant_id, body))?;
    }
    let stats = pipeline.drain()?;
    println!("\nscored {} comments", stats.processed);

    println!("\nleast certain first:");
    for (comment, record) in rank_uncertain(store.predicted_stances(debate.debate_id)?) {
        println!(
            "  {:<12} p={:.3}  margin={:.3}  {:?}",
            record.label.as_str(),
            record.p_favor,
            record.margin(),
            comment.body
        );
    }
    Ok(())
}
