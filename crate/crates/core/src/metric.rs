//! Emotion-wheel accuracy between a predicted and a ground-truth label set.
//!
//! Every label is mapped to its wheel cluster. A predicted label counts as
//! matched when its cluster also occurs among the ground-truth clusters, and
//! vice versa for recall. Labels the wheel does not cover never match. The
//! score is the mean of precision and recall.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::wheel::{normalize_label, ClusterId, EmotionWheel};

/// Normalized, de-duplicated labels in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes every entry, dropping empties and repeats.
    pub fn from_raw<I, S>(raw: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::new();
        for item in raw {
            set.insert(item.as_ref());
        }
        set
    }

    /// Returns `true` if the normalized label was added.
    pub fn insert(&mut self, raw: &str) -> bool {
        let label = normalize_label(raw);
        if label.is_empty() || self.labels.contains(&label) {
            return false;
        }
        self.labels.push(label);
        true
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
    pub matched_pred: usize,
    pub matched_gt: usize,
    /// Labels from either set that the wheel does not cover.
    pub unmatched_labels: Vec<String>,
}

fn clusters_of(set: &LabelSet, wheel: &EmotionWheel) -> Vec<Option<ClusterId>> {
    set.iter().map(|l| wheel.resolve_normalized(l)).collect()
}

/// Wheel-based score of `pred` against `gt`. An empty prediction scores 0.
pub fn ew_score(pred: &LabelSet, gt: &LabelSet, wheel: &EmotionWheel) -> Result<MetricReport> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let pred_clusters = clusters_of(pred, wheel);
    let gt_clusters = clusters_of(gt, wheel);
    let pred_set: BTreeSet<ClusterId> = pred_clusters.iter().flatten().copied().collect();
    let gt_set: BTreeSet<ClusterId> = gt_clusters.iter().flatten().copied().collect();

    let matched_pred = pred_clusters
        .iter()
        .filter(|c| c.is_some_and(|c| gt_set.contains(&c)))
        .count();
    let matched_gt = gt_clusters
        .iter()
        .filter(|c| c.is_some_and(|c| pred_set.contains(&c)))
        .count();

    let precision = if pred.is_empty() {
        0.0
    } else {
        matched_pred as f64 / pred.len() as f64
    };
    let recall = matched_gt as f64 / gt.len() as f64;

    let mut unmatched_labels = Vec::new();
    for (label, cluster) in pred.iter().zip(&pred_clusters).chain(gt.iter().zip(&gt_clusters)) {
        if cluster.is_none() && !unmatched_labels.iter().any(|u: &String| u == label) {
            unmatched_labels.push(String::from(label));
        }
    }

    Ok(MetricReport {
        score: (precision + recall) / 2.0,
        precision,
        recall,
        matched_pred,
        matched_gt,
        unmatched_labels,
    })
}

/// Unweighted per-sample mean. Counts are summed and unmatched labels are
/// merged in first-seen order. Returns `None` for an empty batch.
pub fn aggregate<'a, I>(reports: I) -> Option<MetricReport>
where
    I: IntoIterator<Item = &'a MetricReport>,
{
    let mut n = 0usize;
    let mut out = MetricReport {
        score: 0.0,
        precision: 0.0,
        recall: 0.0,
        matched_pred: 0,
        matched_gt: 0,
        unmatched_labels: Vec::new(),
    };
    for r in reports {
        n += 1;
        out.score += r.score;
        out.precision += r.precision;
        out.recall += r.recall;
        out.matched_pred += r.matched_pred;
        out.matched_gt += r.matched_gt;
        for label in &r.unmatched_labels {
            if !out.unmatched_labels.contains(label) {
                out.unmatched_labels.push(label.clone());
            }
        }
    }
    if n == 0 {
        return None;
    }
    let n = n as f64;
    out.score /= n;
    out.precision /= n;
    out.recall /= n;
    Some(out)
}
