//! Scores a handful of comments with the heuristic indicator backend and the
//! shipped weight file, printing the raw and normalized quality scores.
//!
//! ```text
//! cargo run --example quality_scores
//! ```

use deliberate::backend::HeuristicQuality;
use deliberate::domain::{Comment, CommentId, DebateId, ParticipantId, INDICATOR_NAMES};
use deliberate::quality::{parse_weights, score_bounds, score_comment};

const BODIES: &[&str] = &[
    "Fine.",
    "I think we should fund night buses because late shifts leave people stranded.",
    "As @maria said, the data shows a drop in accidents, so I propose we extend the pilot.",
    "Oh great, another brilliant plan. Sure, that will totally work.",
];

fn main() -> deliberate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/config/weights.placeholder.txt");
    let weights = parse_weights(&std::fs::read_to_string(path)?)?;
    let (lo, hi) = score_bounds(&weights);
    println!("weights {} (raw range {lo} .. {hi})", weights.version());

    let backend = HeuristicQuality::default();
    for (i, body) in BODIES.iter().enumerate() {
        let comment = Comment {
            comment_id: CommentId(i as i64 + 1),
            debate_id: DebateId(1),
            author_id: ParticipantId(1),
            body: body.to_string(),
            parent_id: None,
            created_at: i as u64,
        };
        let score = score_comment(&comment, &weights, &backend).expect("heuristic backend never fails");
        println!("\n#{} {body:?}", i + 1);
        println!("  raw {:.3}  normalized {:.3}", score.raw, score.normalized);
        for (name, p) in INDICATOR_NAMES.iter().zip(&score.predictions) {
            if *p > 0.0 {
                println!("  {name:<28} {p:.2}");
            }
        }
    }
    Ok(())
}
