//! Labeled stance examples and their line format.
//!
//! One JSON object per line, UTF-8, `\n` terminated, with exactly the fields
//! `question`, `body`, `label` (`in_favor` | `against`) and `origin`
//! (`synthetic` | `manual`), written in that order with no insignificant
//! whitespace:
//!
//! ```text
//! {"question":"Should the park open at night?","body":"Yes, it helps shift workers.","label":"in_favor","origin":"synthetic"}
//! ```
//!
//! On input, empty lines (after dropping a trailing `\r`) are skipped and
//! unknown fields are rejected. Output is byte-identical to what
//! [`render_labeled`] produces for the same examples.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::StanceLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Synthetic,
    Manual,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Synthetic => "synthetic",
            Origin::Manual => "manual",
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Origin::Synthetic),
            "manual" => Ok(Origin::Manual),
            other => Err(Error::validation(format!("unknown origin `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OriginFilter {
    #[default]
    All,
    Only(Origin),
}

impl OriginFilter {
    pub fn matches(self, origin: Origin) -> bool {
        match self {
            OriginFilter::All => true,
            OriginFilter::Only(o) => o == origin,
        }
    }
}

impl FromStr for OriginFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(OriginFilter::All),
            other => other.parse().map(OriginFilter::Only),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledExample {
    pub question: String,
    pub body: String,
    pub label: StanceLabel,
    pub origin: Origin,
}

impl LabeledExample {
    pub fn new(
        question: impl Into<String>,
        body: impl Into<String>,
        label: StanceLabel,
        origin: Origin,
    ) -> Result<Self> {
        let ex = LabeledExample {
            question: question.into(),
            body: body.into(),
            label,
            origin,
        };
        ex.validate()?;
        Ok(ex)
    }

    fn validate(&self) -> Result<()> {
        if self.question.trim().is_empty() || self.body.trim().is_empty() {
            return Err(Error::validation("question and body must be non-empty"));
        }
        Ok(())
    }
}

/// Parses a whole file; the first bad line fails the lot.
pub fn parse_labeled(text: &str) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.split('\n').enumerate() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let ex: LabeledExample = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        ex.validate().map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(ex);
    }
    Ok(out)
}

pub fn render_labeled<'a>(examples: impl IntoIterator<Item = &'a LabeledExample>) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(ex).expect("labeled example serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_encoding() {
        let ex = LabeledExample::new("Q?", "a \"b\"\nc", StanceLabel::InFavor, Origin::Synthetic).unwrap();
        assert_eq!(
            render_labeled([&ex]),
            "{\"question\":\"Q?\",\"body\":\"a \\\"b\\\"\\nc\",\"label\":\"in_favor\",\"origin\":\"synthetic\"}\n"
        );
    }

    #[test]
    fn missing_label_names_line() {
        let text = "{\"question\":\"q\",\"body\":\"b\",\"label\":\"against\",\"origin\":\"manual\"}\n\
                    {\"question\":\"q\",\"body\":\"b\",\"origin\":\"manual\"}\n";
        let err = parse_labeled(text).unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 2);
                assert!(reason.contains("label"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_blank_body_and_unknown_fields() {
        assert!(parse_labeled("{\"question\":\"q\",\"body\":\" \",\"label\":\"against\",\"origin\":\"manual\"}").is_err());
        assert!(parse_labeled(
            "{\"question\":\"q\",\"body\":\"b\",\"label\":\"against\",\"origin\":\"manual\",\"x\":1}"
        )
        .is_err());
    }

    #[test]
    fn empty_file() {
        assert!(parse_labeled("").unwrap().is_empty());
        assert_eq!(render_labeled(&[]), "");
    }

    proptest! {
        #[test]
        fn render_parse_identity(
            rows in proptest::collection::vec(("\\PC*[a-z]\\PC*", "\\PC*[a-z]\\PC*", any::<bool>(), any::<bool>()), 0..20)
        ) {
            let examples: Vec<LabeledExample> = rows
                .into_iter()
                .map(|(q, b, fav, syn)| LabeledExample {
                    question: q,
                    body: b,
                    label: if fav { StanceLabel::InFavor } else { StanceLabel::Against },
                    origin: if syn { Origin::Synthetic } else { Origin::Manual },
                })
                .collect();
            let text = render_labeled(&examples);
            prop_assert_eq!(parse_labeled(&text).unwrap(), examples);
        }
    }
}
