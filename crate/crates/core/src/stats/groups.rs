use serde::Serialize;

use super::mean;
use crate::{Error, Result};

/// Decision times (seconds) recorded for one ordered image pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSample {
    pub pair_id: String,
    pub oddball_id: String,
    pub distractor_id: String,
    pub times: Vec<f64>,
}

impl GroupSample {
    pub fn new(
        pair_id: impl Into<String>,
        oddball_id: impl Into<String>,
        distractor_id: impl Into<String>,
        times: Vec<f64>,
    ) -> Result<Self> {
        let pair_id = pair_id.into();
        if times.is_empty() {
            return Err(Error::invalid(format!("group {pair_id} has no samples")));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid(format!("group {pair_id}: time {t} is not positive")));
        }
        Ok(Self {
            pair_id,
            oddball_id: oddball_id.into(),
            distractor_id: distractor_id.into(),
            times,
        })
    }

    /// Group with a generated pair id, for synthetic data.
    pub fn unnamed(index: usize, times: Vec<f64>) -> Result<Self> {
        Self::new(format!("g{index}"), format!("k{index}"), format!("l{index}"), times)
    }

    pub fn mean(&self) -> f64 {
        mean(&self.times)
    }
}

/// Groups of equal size whose times are multiplied by a per-group
/// dissimilarity value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledDataset {
    pub index_name: String,
    pub pair_ids: Vec<String>,
    /// `scaled[g][j] = τ_g(j) · factor_g`.
    pub scaled: Vec<Vec<f64>>,
}

impl ScaledDataset {
    pub fn new(index_name: impl Into<String>, groups: &[GroupSample], factors: &[f64]) -> Result<Self> {
        let index_name = index_name.into();
        if groups.len() < 2 {
            return Err(Error::invalid(format!("need at least 2 groups, got {}", groups.len())));
        }
        if factors.len() != groups.len() {
            return Err(Error::invalid(format!(
                "{} scaling factors for {} groups",
                factors.len(),
                groups.len()
            )));
        }
        let n = groups[0].times.len();
        if let Some(g) = groups.iter().find(|g| g.times.len() != n) {
            return Err(Error::invalid(format!(
                "group {} has {} samples, expected {n}; group sizes must be equal",
                g.pair_id,
                g.times.len()
            )));
        }
        if let Some((g, f)) = groups.iter().zip(factors).find(|(_, f)| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::DegenerateInput(format!(
                "index {index_name}: scaling factor for group {} is {f}; it must be positive",
                g.pair_id
            )));
        }
        Ok(Self {
            index_name,
            pair_ids: groups.iter().map(|g| g.pair_id.clone()).collect(),
            scaled: groups
                .iter()
                .zip(factors)
                .map(|(g, f)| g.times.iter().map(|t| t * f).collect())
                .collect(),
        })
    }

    /// Unscaled dataset (every factor 1).
    pub fn unscaled(index_name: impl Into<String>, groups: &[GroupSample]) -> Result<Self> {
        Self::new(index_name, groups, &vec![1.0; groups.len()])
    }

    /// Number of groups `g`.
    pub fn groups(&self) -> usize {
        self.scaled.len()
    }

    /// Samples per group `n`.
    pub fn group_size(&self) -> usize {
        self.scaled[0].len()
    }

    pub fn group_means(&self) -> Vec<f64> {
        self.scaled.iter().map(|g| mean(g)).collect()
    }
}
