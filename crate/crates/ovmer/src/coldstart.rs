//! Cold-start corpus emission: `{"id", "description", "labels"}` rows in,
//! `{"id", "target"}` rows out.

use ovmer_core::{check_format, format_cold_start_target, EmotionWheel, LabelSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::jsonl::{parse_lines, to_lines};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptionRow {
    pub id: String,
    pub description: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub id: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColdStartCorpus {
    pub rows: Vec<TargetRow>,
    /// Distinct labels the wheel does not cover.
    pub uncovered_labels: Vec<String>,
}

impl ColdStartCorpus {
    pub fn to_jsonl(&self) -> String {
        to_lines(&self.rows)
    }
}

/// Builds every target, or reports every bad row.
pub fn make_coldstart(input: &str, wheel: &EmotionWheel) -> Result<ColdStartCorpus> {
    let rows: Vec<(usize, DescriptionRow)> = parse_lines(input)?;
    let mut errors = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    let mut uncovered = Vec::new();
    for (line, row) in rows {
        let labels = LabelSet::from_raw(&row.labels);
        let target = format_cold_start_target(&row.description, &labels)
            .map_err(|e| e.to_string())
            .and_then(|t| {
                if check_format(&t).well_formed {
                    Ok(t)
                } else {
                    Err("description contains template tags".to_string())
                }
            });
        match target {
            Ok(target) => {
                for l in labels.iter().filter(|l| wheel.cluster_of(l).is_none()) {
                    if !uncovered.iter().any(|u: &String| u == l) {
                        uncovered.push(l.to_string());
                    }
                }
                out.push(TargetRow { id: row.id, target });
            }
            Err(message) => errors.push(RowError {
                line,
                id: Some(row.id),
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    Ok(ColdStartCorpus {
        rows: out,
        uncovered_labels: uncovered,
    })
}
