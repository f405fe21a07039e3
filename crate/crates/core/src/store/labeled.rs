use rusqlite::{params, Row};

use super::{constraint_as_validation, Store};
use crate::error::{Error, Result};
use crate::stance::{parse_labeled, render_labeled, LabeledExample, OriginFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct IngestReport {
    pub stored: usize,
    pub duplicates: usize,
}

fn example_from_row(r: &Row<'_>) -> rusqlite::Result<LabeledExample> {
    let conv = |i: usize, e: Error| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e.into())
    };
    let label: String = r.get(2)?;
    let origin: String = r.get(3)?;
    Ok(LabeledExample {
        question: r.get(0)?,
        body: r.get(1)?,
        label: label.parse().map_err(|e| conv(2, e))?,
        origin: origin.parse().map_err(|e| conv(3, e))?,
    })
}

impl Store {
    /// Stores examples in one transaction. An example whose question, body
    /// and label already exist is counted as a duplicate and skipped.
    pub fn ingest_labeled(&self, examples: &[LabeledExample]) -> Result<IngestReport> {
        self.write(|tx| {
            let mut report = IngestReport::default();
            let mut stmt = tx.prepare_cached(
                "INSERT INTO labeled_examples (question, body, label, origin) VALUES (?1, ?2, ?3, ?4)
                 ON CONFLICT (question, body, label) DO NOTHING",
            )?;
            for ex in examples {
                let n = stmt
                    .execute(params![ex.question, ex.body, ex.label.as_str(), ex.origin.as_str()])
                    .map_err(constraint_as_validation)?;
                if n == 1 {
                    report.stored += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            Ok(report)
        })
    }

    /// Parses and ingests a labeled-example file; nothing is stored unless
    /// every line is valid.
    pub fn ingest_labeled_file(&self, text: &str) -> Result<IngestReport> {
        let examples = parse_labeled(text)?;
        self.ingest_labeled(&examples)
    }

    /// Examples in insertion order.
    pub fn labeled_examples(&self, filter: OriginFilter) -> Result<Vec<LabeledExample>> {
        self.read(|c| {
            let mut stmt = c.prepare_cached(
                "SELECT question, body, label, origin FROM labeled_examples ORDER BY example_id",
            )?;
            let rows = stmt.query_map([], example_from_row)?;
            let all: Vec<LabeledExample> = rows.collect::<rusqlite::Result<_>>()?;
            Ok(all.into_iter().filter(|e| filter.matches(e.origin)).collect())
        })
    }

    /// Fine-tuning export in the same format `ingest_labeled_file` reads.
    pub fn export_labeled(&self, filter: OriginFilter) -> Result<String> {
        Ok(render_labeled(&self.labeled_examples(filter)?))
    }
}
