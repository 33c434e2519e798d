//! Named residual summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub max: f64,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_node: Option<Vec<f64>>,
}

impl ResidualEntry {
    /// Summary of nonnegative samples; an empty sample set is reported as zero.
    /// NaN samples propagate into `max` so they can never pass a tolerance.
    pub fn from_samples(samples: &[f64]) -> Self {
        let max = samples.iter().fold(0.0f64, |a, &b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
        let mean = if samples.is_empty() { 0.0 } else { samples.iter().sum::<f64>() / samples.len() as f64 };
        Self { max, mean, per_node: None }
    }
}

/// Residuals keyed by name, iterated in sorted order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub resolution: Vec<usize>,
    pub entries: BTreeMap<String, ResidualEntry>,
}

impl ResidualReport {
    pub fn new(resolution: Vec<usize>) -> Self {
        Self { resolution, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, samples: &[f64]) {
        self.entries.insert(name.into(), ResidualEntry::from_samples(samples));
    }

    /// Like [`insert`](Self::insert) but keeps the samples.
    pub fn insert_with_samples(&mut self, name: impl Into<String>, samples: Vec<f64>) {
        let mut e = ResidualEntry::from_samples(&samples);
        e.per_node = Some(samples);
        self.entries.insert(name.into(), e);
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.get(name)
    }

    /// Max of a named entry; panics when absent.
    pub fn max(&self, name: &str) -> f64 {
        self.entries.get(name).unwrap_or_else(|| panic!("no residual named `{name}`")).max
    }

    pub fn merge(&mut self, other: ResidualReport) {
        self.entries.extend(other.entries);
    }

    /// Names whose max exceeds the tolerance looked up by name, or is NaN.
    pub fn failures(&self, tol: impl Fn(&str) -> f64) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(name, e)| !(e.max <= tol(name)))
            .map(|(name, _)| name.clone())
            .collect()
    }
}
