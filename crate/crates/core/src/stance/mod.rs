//! Stance prediction, hard-example ranking and labeled-example files.

mod labeled;

use std::collections::BTreeSet;

pub use labeled::{parse_labeled, render_labeled, LabeledExample, Origin, OriginFilter};

use crate::backend::StanceBackend;
use crate::domain::{Comment, CommentId, StanceRecord, StanceSource};
use crate::error::{Error, Result, ScoringError};
use crate::markers;

pub const DEFAULT_SLOPE: f64 = 0.5;

/// Pro/con marker lists for the heuristic stance backend.
///
/// Text format, one `key = value` per line (blank and `#` lines ignored):
///
/// ```text
/// slope = 0.5
/// pro = support, agree
/// con = oppose, disagree
/// ```
///
/// Markers are comma separated, trimmed and must be lowercase. `slope` is
/// optional and defaults to 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceRuleSet {
    pro: BTreeSet<String>,
    con: BTreeSet<String>,
    slope: f64,
}

impl StanceRuleSet {
    pub fn new<I, S>(pro: I, con: I, slope: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pro: BTreeSet<String> = pro.into_iter().map(Into::into).collect();
        let con: BTreeSet<String> = con.into_iter().map(Into::into).collect();
        if pro.is_empty() || con.is_empty() {
            return Err(Error::config("stance_rules", "pro and con markers must be non-empty"));
        }
        if let Some(m) = pro.intersection(&con).next() {
            return Err(Error::config("stance_rules", format!("marker `{m}` is both pro and con")));
        }
        if let Some(m) = pro.iter().chain(&con).find(|m| m.is_empty() || **m != m.to_lowercase()) {
            return Err(Error::config("stance_rules", format!("marker `{m}` must be non-empty lowercase")));
        }
        if !slope.is_finite() || slope <= 0.0 {
            return Err(Error::config("stance_rules", "slope must be positive"));
        }
        Ok(StanceRuleSet { pro, con, slope })
    }

    pub fn pro(&self) -> &BTreeSet<String> {
        &self.pro
    }

    pub fn con(&self) -> &BTreeSet<String> {
        &self.con
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Same rules with the pro and con lists exchanged.
    pub fn swapped(&self) -> Self {
        StanceRuleSet {
            pro: self.con.clone(),
            con: self.pro.clone(),
            slope: self.slope,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut slope = DEFAULT_SLOPE;
        let mut pro = None;
        let mut con = None;
        for (idx, raw_line) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw_line.strip_suffix('\r').unwrap_or(raw_line).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "expected `key = value`".into(),
                });
            };
            let list = || -> Vec<String> {
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|m| !m.is_empty())
                    .map(str::to_string)
                    .collect()
            };
            match key.trim() {
                "slope" => {
                    slope = value.trim().parse().map_err(|e| Error::Parse {
                        line: line_no,
                        reason: format!("bad slope: {e}"),
                    })?
                }
                "pro" => pro = Some(list()),
                "con" => con = Some(list()),
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let pro = pro.ok_or_else(|| Error::config("stance_rules", "missing `pro`"))?;
        let con = con.ok_or_else(|| Error::config("stance_rules", "missing `con`"))?;
        StanceRuleSet::new(pro, con, slope)
    }

    pub fn render(&self) -> String {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        format!(
            "slope = {:?}\npro = {}\ncon = {}\n",
            self.slope,
            join(&self.pro),
            join(&self.con)
        )
    }
}

impl Default for StanceRuleSet {
    fn default() -> Self {
        StanceRuleSet::new(
            vec!["support", "agree", "in favor", "good idea", "benefit", "yes"],
            vec!["oppose", "disagree", "against", "bad idea", "reject", "harmful"],
            DEFAULT_SLOPE,
        )
        .expect("default stance rules are valid")
    }
}

/// `0.5 + 0.5 * tanh(slope * (pro - con))` over marker hits in the body.
pub fn heuristic_p_favor(body: &str, rules: &StanceRuleSet) -> f64 {
    let pro = markers::count_all(body, &rules.pro) as f64;
    let con = markers::count_all(body, &rules.con) as f64;
    0.5 + 0.5 * (rules.slope * (pro - con)).tanh()
}

/// Classifies a comment against its debate question.
pub fn predict_stance(
    comment_id: CommentId,
    question: &str,
    body: &str,
    backend: &dyn StanceBackend,
) -> Result<StanceRecord, ScoringError> {
    if question.trim().is_empty() || body.trim().is_empty() {
        return Err(ScoringError::Permanent("question and body must be non-empty".into()));
    }
    let prediction = backend.predict(question, body)?;
    let record = StanceRecord::predicted(comment_id, prediction.p_favor, prediction.model_version)
        .map_err(|e| ScoringError::Permanent(e.to_string()))?;
    if record.label != prediction.label {
        return Err(ScoringError::Permanent(format!(
            "backend label {} inconsistent with p_favor {}",
            prediction.label, prediction.p_favor
        )));
    }
    Ok(record)
}

/// Orders predicted comments from least to most certain (`|p - 0.5|`
/// ascending, then comment id). Declared records are not model output and
/// are dropped.
pub fn rank_uncertain(items: Vec<(Comment, StanceRecord)>) -> Vec<(Comment, StanceRecord)> {
    let mut items: Vec<_> = items
        .into_iter()
        .filter(|(_, r)| r.source == StanceSource::Predicted)
        .collect();
    items.sort_by(|(ca, ra), (cb, rb)| {
        ra.margin()
            .total_cmp(&rb.margin())
            .then(ca.comment_id.cmp(&cb.comment_id))
    });
    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::HeuristicStance;
    use crate::domain::{DebateId, ParticipantId, StanceLabel};

    #[test]
    fn worked_examples() {
        let rules = StanceRuleSet::default();
        assert_eq!(heuristic_p_favor("hello world", &rules), 0.5);

        let p = heuristic_p_favor("I fully support this proposal", &rules);
        assert!((p - 0.731_058_6).abs() < 1e-6, "{p}");

        let p = heuristic_p_favor("I oppose this; I disagree", &rules);
        assert!((p - 0.119_202_9).abs() < 1e-6, "{p}");
    }

    #[test]
    fn tie_predicts_against() {
        let backend = HeuristicStance::default();
        let r = predict_stance(CommentId(1), "Should we?", "hello", &backend).unwrap();
        assert_eq!(r.p_favor, 0.5);
        assert_eq!(r.label, StanceLabel::Against);
        assert_eq!(r.source, StanceSource::Predicted);
    }

    #[test]
    fn question_is_not_matched() {
        let backend = HeuristicStance::default();
        let r = predict_stance(CommentId(1), "Do you support it?", "hmm", &backend).unwrap();
        assert_eq!(r.p_favor, 0.5);
    }

    #[test]
    fn empty_inputs_are_permanent_failures() {
        let backend = HeuristicStance::default();
        let err = predict_stance(CommentId(1), "q", "  ", &backend).unwrap_err();
        assert!(!err.is_retriable());
    }

    #[test]
    fn rule_validation() {
        assert!(StanceRuleSet::new(vec!["a"], vec!["a"], 0.5).is_err());
        assert!(StanceRuleSet::new(vec!["A"], vec!["b"], 0.5).is_err());
        assert!(StanceRuleSet::new(Vec::<&str>::new(), vec!["b"], 0.5).is_err());
        let r = StanceRuleSet::default();
        assert_eq!(StanceRuleSet::parse(&r.render()).unwrap(), r);
        assert!(matches!(StanceRuleSet::parse("pro = a\nfoo = b"), Err(Error::Parse { line: 2, .. })));
    }

    fn comment(id: i64) -> Comment {
        Comment {
            comment_id: CommentId(id),
            debate_id: DebateId(1),
            author_id: ParticipantId(1),
            body: format!("c{id}"),
            parent_id: None,
            created_at: id as u64,
        }
    }

    fn item(id: i64, p: f64) -> (Comment, StanceRecord) {
        (comment(id), StanceRecord::predicted(CommentId(id), p, "m").unwrap())
    }

    #[test]
    fn rank_examples() {
        let ranked = rank_uncertain(vec![item(1, 0.91), item(2, 0.52), item(3, 0.30)]);
        let ids: Vec<i64> = ranked.iter().map(|(c, _)| c.comment_id.0).collect();
        assert_eq!(ids, vec![2, 3, 1]);

        let ranked = rank_uncertain(vec![item(7, 0.4)]);
        assert_eq!(ranked.len(), 1);

        let ranked = rank_uncertain(vec![item(9, 0.25), item(4, 0.75)]);
        assert_eq!(ranked[0].0.comment_id, CommentId(4));
    }
}
