//! Emotion-wheel taxonomy.
//!
//! A wheel is a flat partition of canonical emotion words into clusters plus
//! a one-hop synonym map. Two labels are a semantic match when they resolve
//! to the same cluster.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense cluster index, `0..wheel.len()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: ClusterId,
    /// Human-readable name from the taxonomy file.
    pub name: String,
    /// Canonical labels, normalized and sorted.
    pub labels: BTreeSet<String>,
    /// Reserved for a future multi-level hierarchy; carried through unchanged.
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionWheel {
    clusters: Vec<Cluster>,
    synonyms: BTreeMap<String, String>,
    index: BTreeMap<String, ClusterId>,
}

/// Lowercases, collapses internal whitespace to single spaces and strips
/// surrounding whitespace and ASCII punctuation. Synonyms are not applied.
pub fn normalize_label(raw: &str) -> String {
    let lower = raw.to_lowercase();
    let mut collapsed = String::with_capacity(lower.len());
    for word in lower.split_whitespace() {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    collapsed
        .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_string()
}

fn normalized_nonempty(raw: &str) -> Result<String> {
    let label = normalize_label(raw);
    if label.is_empty() {
        Err(Error::EmptyLabel(raw.to_string()))
    } else {
        Ok(label)
    }
}

impl EmotionWheel {
    /// Builds and validates a wheel. Cluster ids are assigned in input order.
    ///
    /// `clusters` holds `(name, labels, parent)` triples and `synonyms` holds
    /// `(surface, canonical)` pairs. Labels are normalized before validation.
    pub fn new<C, S>(clusters: C, synonyms: S) -> Result<Self>
    where
        C: IntoIterator<Item = (String, Vec<String>, Option<String>)>,
        S: IntoIterator<Item = (String, String)>,
    {
        let mut built = Vec::new();
        let mut index = BTreeMap::new();
        let mut names = BTreeSet::new();
        for (name, labels, parent) in clusters {
            if !names.insert(name.clone()) {
                return Err(Error::DuplicateCluster(name));
            }
            let id = ClusterId(built.len());
            let mut set = BTreeSet::new();
            for raw in &labels {
                let label = normalized_nonempty(raw)?;
                if index.insert(label.clone(), id).is_some() {
                    return Err(Error::DuplicateLabel(label));
                }
                set.insert(label);
            }
            if set.is_empty() {
                return Err(Error::EmptyCluster(name));
            }
            built.push(Cluster {
                id,
                name,
                labels: set,
                parent,
            });
        }

        let mut synonym_map = BTreeMap::new();
        for (surface, target) in synonyms {
            let surface = normalized_nonempty(&surface)?;
            let target = normalize_label(&target);
            if !index.contains_key(&target) {
                return Err(Error::DanglingSynonym { surface, target });
            }
            if index.contains_key(&surface) {
                return Err(Error::SynonymShadowsLabel(surface));
            }
            synonym_map.insert(surface, target);
        }

        Ok(Self {
            clusters: built,
            synonyms: synonym_map,
            index,
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// All canonical labels ordered by cluster id, then label.
    pub fn canonical_labels(&self) -> impl Iterator<Item = &str> {
        self.clusters.iter().flat_map(|c| c.labels.iter().map(String::as_str))
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster> {
        self.clusters.get(id.0)
    }

    /// Resolves a raw label to its cluster, following at most one synonym hop.
    /// `None` means the label is not covered by the wheel.
    pub fn cluster_of(&self, label: &str) -> Option<ClusterId> {
        let label = normalize_label(label);
        self.resolve_normalized(&label)
    }

    pub(crate) fn resolve_normalized(&self, label: &str) -> Option<ClusterId> {
        if let Some(id) = self.index.get(label) {
            return Some(*id);
        }
        self.synonyms
            .get(label)
            .and_then(|target| self.index.get(target))
            .copied()
    }
}
