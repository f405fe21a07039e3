//! Background scoring: posts comments while two worker threads score them,
//! waits for the outbox to empty and shows that reprocessing is a no-op.
//!
//! ```text
//! cargo run --example pipeline_workers
//! ```

use std::sync::Arc;
use std::time::{Duration, Instant};

use deliberate::backend::{HeuristicQuality, HeuristicStance};
use deliberate::domain::{ModuleKind, NewComment, NewDebate, WeightVector};
use deliberate::pipeline::Pipeline;
use deliberate::store::Store;

fn main() -> deliberate::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path())?);
    let pipeline = Arc::new(Pipeline::new(
        Arc::clone(&store),
        Arc::new(HeuristicStance::default()),
        Arc::new(HeuristicQuality::default()),
        Arc::new(WeightVector::placeholder()),
    ));
    let workers = pipeline.spawn_workers(2);

    let rec = store.create_debate(&NewDebate::new("Four-day week?", ModuleKind::Recommendation), Default::default())?;
    let qual = store.create_debate(&NewDebate::new("Office or remote?", ModuleKind::Quality), Default::default())?;
    let author = store.create_participant("jo", "token-jo")?;

    let started = Instant::now();
    for i in 0..200 {
        let debate = if i % 2 == 0 { rec.debate_id } else { qual.debate_id };
        let body = if i % 3 == 0 {
            format!("I support this, because point {i} matters.")
        } else {
            format!("I disagree with point {i}.")
        };
        store.append_comment_with_event(&NewComment::new(debate, author.participant_id, body))?;
        pipeline.notify();
    }

    while pipeline.counts()?.pending > 0 {
        std::thread::sleep(Duration::from_millis(5));
    }
    workers.shutdown();
    let counts = pipeline.counts()?;
    println!(
        "done {} failed {} pending {} in {:?}",
        counts.done,
        counts.failed,
        counts.pending,
        started.elapsed()
    );

    let before = store.dump()?;
    let rerun = pipeline.reprocess_done()?;
    println!("reprocessed {rerun} jobs; store unchanged: {}", before == store.dump()?);
    Ok(())
}
