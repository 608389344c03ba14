//! Taxonomy JSON: `{"clusters": [{"id", "labels", "parent"}], "synonyms": {..}}`.

use std::collections::BTreeMap;

use ovmer_core::EmotionWheel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bundled 8-cluster wheel.
pub const DEFAULT_WHEEL_JSON: &str = include_str!("../data/default_wheel.json");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterDoc {
    id: String,
    labels: Vec<String>,
    #[serde(default)]
    parent: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WheelDoc {
    clusters: Vec<ClusterDoc>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
}

pub fn load_wheel(document: &str) -> Result<EmotionWheel> {
    let doc: WheelDoc = serde_json::from_str(document).map_err(|e| Error::Taxonomy(format!("parse error: {e}")))?;
    EmotionWheel::new(
        doc.clusters.into_iter().map(|c| (c.id, c.labels, c.parent)),
        doc.synonyms,
    )
    .map_err(|e| Error::Taxonomy(e.to_string()))
}

/// Canonical form: clusters by id, labels sorted, synonyms sorted.
pub fn serialize_wheel(wheel: &EmotionWheel) -> String {
    let doc = WheelDoc {
        clusters: wheel
            .clusters()
            .iter()
            .map(|c| ClusterDoc {
                id: c.name.clone(),
                labels: c.labels.iter().cloned().collect(),
                parent: c.parent.clone(),
            })
            .collect(),
        synonyms: wheel.synonyms().clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("wheel serializes");
    out.push('\n');
    out
}

pub fn default_wheel() -> EmotionWheel {
    load_wheel(DEFAULT_WHEEL_JSON).expect("bundled wheel is valid")
}
