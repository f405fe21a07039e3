//! Marker rules for the heuristic indicator backend, and their text format.
//!
//! One indicator per line, in weight-vector order:
//!
//! ```text
//! # name | gain | markers
//! justification | 0.5 | because, since, therefore
//! discrimination | |
//! ```
//!
//! Lines are split on `\n` (a trailing `\r` is dropped) and trimmed. Blank
//! lines and lines starting with `#` are ignored. Every other line has exactly
//! three `|`-separated cells. An empty gain cell means the default `0.5`.
//! Markers are separated by `,`, trimmed, must be lowercase, and empty pieces
//! are dropped, so a marker cannot contain `,` or `|`. Exactly 20 indicator
//! lines are required.

use std::fmt::Write as _;

use crate::domain::{INDICATOR_COUNT, INDICATOR_NAMES};
use crate::error::{Error, Result};

pub const DEFAULT_GAIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRule {
    pub name: String,
    pub gain: f64,
    pub markers: Vec<String>,
}

impl IndicatorRule {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        gain: f64,
        markers: impl IntoIterator<Item = S>,
    ) -> Self {
        IndicatorRule {
            name: name.into(),
            gain,
            markers: markers.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRuleSet {
    rules: Vec<IndicatorRule>,
}

impl IndicatorRuleSet {
    pub fn new(rules: Vec<IndicatorRule>) -> Result<Self> {
        if rules.len() != INDICATOR_COUNT {
            return Err(Error::config(
                "indicator_rules",
                format!("expected {INDICATOR_COUNT} indicators, got {}", rules.len()),
            ));
        }
        for rule in &rules {
            if !rule.gain.is_finite() || rule.gain < 0.0 {
                return Err(Error::config(
                    "indicator_rules",
                    format!("gain of `{}` must be finite and non-negative", rule.name),
                ));
            }
            for m in &rule.markers {
                if m.is_empty() || *m != m.to_lowercase() {
                    return Err(Error::config(
                        "indicator_rules",
                        format!("marker `{m}` of `{}` must be non-empty lowercase", rule.name),
                    ));
                }
            }
        }
        Ok(IndicatorRuleSet { rules })
    }

    pub fn indicators(&self) -> &[IndicatorRule] {
        &self.rules
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.name.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (idx, raw_line) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw_line.strip_suffix('\r').unwrap_or(raw_line).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split('|').map(str::trim).collect();
            let [name, gain, markers] = cells[..] else {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected 3 `|`-separated cells, found {}", cells.len()),
                });
            };
            if name.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "indicator name is empty".into(),
                });
            }
            let gain = if gain.is_empty() {
                DEFAULT_GAIN
            } else {
                gain.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    reason: format!("bad gain `{gain}`: {e}"),
                })?
            };
            let markers: Vec<String> = markers
                .split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .map(str::to_string)
                .collect();
            if let Some(m) = markers.iter().find(|m| **m != m.to_lowercase()) {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("marker `{m}` is not lowercase"),
                });
            }
            rules.push(IndicatorRule {
                name: name.to_string(),
                gain,
                markers,
            });
        }
        IndicatorRuleSet::new(rules)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# name | gain | markers\n");
        for r in &self.rules {
            let _ = writeln!(out, "{} | {} | {}", r.name, r.gain, r.markers.join(", "));
        }
        out
    }
}

impl Default for IndicatorRuleSet {
    fn default() -> Self {
        let markers: [&[&str]; INDICATOR_COUNT] = [
            &["proposal", "topic", "issue"],
            &["percent", "%", "study", "statistics"],
            &["i think", "i believe", "in my opinion", "i feel"],
            &["because", "since", "therefore"],
            &["we should", "we could", "i propose", "solution"],
            &["for example", "in fact", "according to"],
            &["?"],
            &["@", "you said"],
            &["article", "link", "http", "video"],
            &["the proposal says", "as stated"],
            &["my family", "my experience", "personally"],
            &["this platform", "this discussion"],
            &["please", "thank you", "thanks"],
            &["respect", "fair point", "i understand"],
            &["!!!"],
            &["damn", "crap"],
            &["idiot", "stupid", "moron"],
            &["yeah right", "oh great", "/s"],
            &[],
            &["when i was", "i remember", "last year"],
        ];
        let rules = INDICATOR_NAMES
            .iter()
            .zip(markers)
            .map(|(name, m)| IndicatorRule::new(*name, DEFAULT_GAIN, m.iter().copied()))
            .collect();
        IndicatorRuleSet::new(rules).expect("default rules are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let rules = IndicatorRuleSet::default();
        let text = rules.render();
        assert_eq!(IndicatorRuleSet::parse(&text).unwrap(), rules);
    }

    #[test]
    fn empty_gain_defaults() {
        let mut text = String::new();
        for k in 0..INDICATOR_COUNT {
            text.push_str(&format!("i{k} | | x{k}\r\n"));
        }
        let rules = IndicatorRuleSet::parse(&text).unwrap();
        assert!(rules.indicators().iter().all(|r| r.gain == DEFAULT_GAIN));
    }

    #[test]
    fn rejects_uppercase_and_wrong_cell_count() {
        let mut lines: Vec<String> = (0..INDICATOR_COUNT).map(|k| format!("i{k} | 0.5 | a")).collect();
        lines[3] = "i3 | 0.5 | Because".into();
        let err = IndicatorRuleSet::parse(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");

        lines[3] = "i3 | 0.5".into();
        let err = IndicatorRuleSet::parse(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn rejects_wrong_count() {
        assert!(matches!(
            IndicatorRuleSet::parse("a | 0.5 | x\n"),
            Err(Error::Config { .. })
        ));
    }
}
