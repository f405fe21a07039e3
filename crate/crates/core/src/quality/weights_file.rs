//! Weight-vector text format.
//!
//! ```text
//! # comment
//! version = aqua-placeholder-1
//! relevance = 0.0
//! justification = 1.0
//! ...
//! ```
//!
//! Lines are split on `\n` (a trailing `\r` is dropped) and trimmed; blank
//! lines and `#` lines are ignored. Each remaining line is `key = value`,
//! split at the first `=`, both sides trimmed. The first entry must have key
//! `version`. It is followed by exactly 20 `name = weight` entries in
//! indicator order; weights are decimal floats and names are unique.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::domain::WeightVector;
use crate::error::{Error, Result};

pub fn parse_weights(text: &str) -> Result<WeightVector> {
    let mut version: Option<String> = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();

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
        let (key, value) = (key.trim(), value.trim());
        if version.is_none() {
            if key != "version" || value.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "first entry must be `version = <text>`".into(),
                });
            }
            version = Some(value.to_string());
            continue;
        }
        if key.is_empty() || key == "version" {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("invalid indicator name `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("duplicate indicator `{key}`"),
            });
        }
        let weight = value.parse::<f64>().map_err(|e| Error::Parse {
            line: line_no,
            reason: format!("bad weight `{value}`: {e}"),
        })?;
        entries.push((key.to_string(), weight));
    }

    let version = version.ok_or_else(|| Error::config("weights", "missing `version` entry"))?;
    WeightVector::new(version, entries)
}

pub fn render_weights(weights: &WeightVector) -> String {
    let mut out = format!("version = {}\n", weights.version());
    for (name, w) in weights.indicator_names().iter().zip(weights.weights()) {
        let _ = writeln!(out, "{name} = {w:?}");
    }
    out
}
