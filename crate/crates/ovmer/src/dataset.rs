//! Training samples: `{"id", "context", "query", "labels"}` per line.

use std::collections::BTreeSet;

use ovmer_core::{LabelSet, Sample};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::jsonl::parse_lines;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub context: usize,
    #[serde(default)]
    pub query: String,
    pub labels: Vec<String>,
}

impl From<&Sample> for SampleRecord {
    fn from(s: &Sample) -> Self {
        Self {
            id: s.id.clone(),
            context: s.context,
            query: s.query.clone(),
            labels: s.gt.as_slice().to_vec(),
        }
    }
}

pub fn load_dataset(text: &str) -> Result<Vec<Sample>> {
    let rows: Vec<(usize, SampleRecord)> = parse_lines(text)?;
    let mut seen = BTreeSet::new();
    let mut samples = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let bad = |message: &str| {
            Error::Row(RowError {
                line,
                id: Some(row.id.clone()),
                message: message.into(),
            })
        };
        if !seen.insert(row.id.clone()) {
            return Err(bad("duplicate id"));
        }
        let gt = LabelSet::from_raw(&row.labels);
        if gt.is_empty() || row.labels.iter().any(|l| ovmer_core::normalize_label(l).is_empty()) {
            return Err(bad("labels must be non-empty and normalizable"));
        }
        samples.push(Sample {
            id: row.id,
            context: row.context,
            query: row.query,
            gt,
        });
    }
    if samples.is_empty() {
        return Err(Error::Core(ovmer_core::Error::EmptyDataset));
    }
    Ok(samples)
}

/// The bundled synthetic task: four contexts, one sample each.
pub fn demo_dataset() -> Vec<Sample> {
    let rows: [(&str, &[&str]); 4] = [
        ("clip-000", &["happy", "cheerful"]),
        ("clip-001", &["sad", "grief"]),
        ("clip-002", &["angry"]),
        ("clip-003", &["anxious", "fearful"]),
    ];
    rows.iter()
        .enumerate()
        .map(|(context, (id, labels))| Sample {
            id: id.to_string(),
            context,
            query: "Please infer the person's emotional state and give open-vocabulary labels.".into(),
            gt: LabelSet::from_raw(labels.iter()),
        })
        .collect()
}
