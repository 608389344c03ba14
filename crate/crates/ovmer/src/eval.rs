//! Batch evaluation of prediction files against reference files.
//!
//! Both files hold `{"id": .., "labels": [..]}` lines, aligned line by line.

use std::collections::BTreeMap;
use std::thread;

use ovmer_core::{aggregate, ew_score, EmotionWheel, LabelSet, MetricReport};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::jsonl::parse_lines;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub id: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub id: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub aggregate: MetricReport,
    pub per_sample: Vec<SampleReport>,
}

fn index_by_id(rows: &[(usize, LabelRecord)]) -> Result<BTreeMap<&str, usize>> {
    let mut ids = BTreeMap::new();
    for (pos, (line, row)) in rows.iter().enumerate() {
        if ids.insert(row.id.as_str(), pos).is_some() {
            return Err(Error::Row(RowError {
                line: *line,
                id: Some(row.id.clone()),
                message: "duplicate id".into(),
            }));
        }
    }
    Ok(ids)
}

/// Scores every aligned pair. Output is sorted by id and does not depend on
/// `workers`.
pub fn batch_evaluate(
    predictions: &str,
    references: &str,
    wheel: &EmotionWheel,
    workers: usize,
) -> Result<BatchReport> {
    let preds: Vec<(usize, LabelRecord)> = parse_lines(predictions)?;
    let refs: Vec<(usize, LabelRecord)> = parse_lines(references)?;
    let pred_ids = index_by_id(&preds)?;
    let ref_ids = index_by_id(&refs)?;
    for (line, r) in &refs {
        if LabelSet::from_raw(&r.labels).is_empty() {
            return Err(Error::Row(RowError {
                line: *line,
                id: Some(r.id.clone()),
                message: "reference has no labels".into(),
            }));
        }
    }
    if let Some(id) = ref_ids.keys().find(|id| !pred_ids.contains_key(*id)) {
        return Err(Error::MissingSample {
            id: id.to_string(),
            file: "predictions",
        });
    }
    if let Some(id) = pred_ids.keys().find(|id| !ref_ids.contains_key(*id)) {
        return Err(Error::MissingSample {
            id: id.to_string(),
            file: "references",
        });
    }
    for ((line, p), (_, r)) in preds.iter().zip(&refs) {
        if p.id != r.id {
            return Err(Error::IdMismatch {
                line: *line,
                expected: r.id.clone(),
                found: p.id.clone(),
            });
        }
    }

    let pairs: Vec<(&LabelRecord, &LabelRecord)> =
        preds.iter().map(|(_, p)| p).zip(refs.iter().map(|(_, r)| r)).collect();
    let score = |(p, r): &(&LabelRecord, &LabelRecord)| -> Result<SampleReport> {
        let report = ew_score(&LabelSet::from_raw(&p.labels), &LabelSet::from_raw(&r.labels), wheel)?;
        Ok(SampleReport {
            id: r.id.clone(),
            report,
        })
    };
    let workers = workers.max(1);
    let chunk = pairs.len().div_ceil(workers).max(1);
    let mut per_sample = thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(score).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();
    per_sample.sort_by(|a, b| a.id.cmp(&b.id));

    let aggregate = aggregate(per_sample.iter().map(|s| &s.report)).unwrap_or(MetricReport {
        score: 0.0,
        precision: 0.0,
        recall: 0.0,
        matched_pred: 0,
        matched_gt: 0,
        unmatched_labels: Vec::new(),
    });
    Ok(BatchReport { aggregate, per_sample })
}
