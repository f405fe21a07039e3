//! Walks one participant through the recommendation lifecycle: declare a
//! stance, get an opposing comment, reply to it, ask for more until the pool
//! runs dry, then change stance and start over.
//!
//! ```text
//! cargo run --example recommendation_session
//! ```

use std::sync::Arc;

use deliberate::backend::{HeuristicQuality, HeuristicStance};
use deliberate::domain::{ModuleKind, NewComment, NewDebate, StanceLabel, WeightVector};
use deliberate::pipeline::Pipeline;
use deliberate::recommend::Recommender;
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
    let recommender = Recommender::new(Arc::clone(&store), 42);

    let debate = store.create_debate(
        &NewDebate::new("Should homework be abolished?", ModuleKind::Recommendation),
        Default::default(),
    )?;
    let others = store.create_participant("others", "token-others")?;
    for body in [
        "I support abolishing it, kids need rest.",
        "Yes, I agree, it is a good idea.",
        "I oppose this. Practice at home is a benefit I would not reject.",
        "I disagree, it is a bad idea.",
        "Against. Homework teaches discipline.",
    ] {
        store.append_comment_with_event(&NewComment::new(debate.debate_id, others.participant_id, body))?;
    }
    pipeline.drain()?;

    let me = store.create_participant("kim", "token-kim")?;
    let (pid, did) = (me.participant_id, debate.debate_id);

    recommender.declare_stance(pid, did, StanceLabel::InFavor)?;
    println!("declared in_favor; pool has {} comments", recommender.eligible_pool(pid, did)?.len());

    let first = recommender.current_or_suggest(pid, did)?.expect("pool is not empty");
    let again = recommender.current_or_suggest(pid, did)?.expect("open suggestion");
    assert_eq!(first.suggestion_id, again.suggestion_id);
    println!("suggested {:?}", store.comment(first.comment_id)?.body);

    let (reply, _, answered) = recommender.record_reply(first.suggestion_id, pid, "Fair point, but rest matters too.")?;
    println!("replied with comment {} (suggestion {} answered)", reply.comment_id, answered.suggestion_id);

    while let Some(s) = recommender.next_suggestion(pid, did)? {
        println!("next        {:?}", store.comment(s.comment_id)?.body);
    }
    println!("pool exhausted");

    recommender.declare_stance(pid, did, StanceLabel::Against)?;
    println!("\ndeclared against; pool has {} comments", recommender.eligible_pool(pid, did)?.len());
    while let Some(s) = recommender.next_suggestion(pid, did)? {
        println!("epoch {}     {:?}", s.epoch, store.comment(s.comment_id)?.body);
    }
    Ok(())
}
