use serde::Serialize;

use super::{anova_statistic, gamma_glrt, groups::ScaledDataset, known_shape_statistic, mean};
use crate::{Error, Result};

const MAJORIZATION_TOL: f64 = 1e-12;

/// Whether `x` majorizes `y`: equal totals and every partial sum of `x`
/// sorted in decreasing order is at least the matching partial sum of `y`.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (xs, ys) = (sorted(x), sorted(y));
    let scale = 1.0 + xs.iter().chain(&ys).map(|v| v.abs()).sum::<f64>();
    let tol = MAJORIZATION_TOL * scale;
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px < py - tol {
            return Ok(false);
        }
    }
    Ok((px - py).abs() <= tol)
}

/// The three equality-of-means statistics for one dissimilarity index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexStatistics {
    pub index_name: String,
    pub anova_t: f64,
    pub anova_p: f64,
    pub gamma_glr: f64,
    pub known_shape: f64,
    /// Group means divided by their average, `T̄_g / T̿`.
    pub normalized_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub statistics: Vec<IndexStatistics>,
    /// Positions into `statistics`, best (smallest statistic) first.
    pub order_anova: Vec<usize>,
    pub order_glr: Vec<usize>,
    pub order_known_shape: Vec<usize>,
    /// Whether the three orderings coincide.
    pub orderings_agree: bool,
    /// `majorization[a][b]`: index a's normalized-mean vector majorizes b's.
    pub majorization: Vec<Vec<bool>>,
}

impl RankingReport {
    /// Names in the agreed order, if the three statistics agree.
    pub fn consensus(&self) -> Option<Vec<&str>> {
        self.orderings_agree.then(|| {
            self.order_anova
                .iter()
                .map(|&i| self.statistics[i].index_name.as_str())
                .collect()
        })
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Compute every statistic for each index and rank the indices (smaller
/// statistic = more clustered scaled means = better).
pub fn rank_indices(datasets: &[ScaledDataset], shape: f64) -> Result<RankingReport> {
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets to rank"));
    }
    let (g, n) = (datasets[0].groups(), datasets[0].group_size());
    if let Some(d) = datasets.iter().find(|d| d.groups() != g || d.group_size() != n) {
        return Err(Error::invalid(format!(
            "dataset {} is {}×{}, expected {g}×{n}; all indices must scale the same times",
            d.index_name,
            d.groups(),
            d.group_size()
        )));
    }
    let statistics = datasets
        .iter()
        .map(|ds| {
            let (anova_t, anova_p) = anova_statistic(ds)?;
            let means = ds.group_means();
            let grand = mean(&means);
            Ok(IndexStatistics {
                index_name: ds.index_name.clone(),
                anova_t,
                anova_p,
                gamma_glr: gamma_glrt(ds)?,
                known_shape: known_shape_statistic(ds, shape)?,
                normalized_means: means.iter().map(|m| m / grand).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&IndexStatistics) -> f64| ascending(&statistics.iter().map(f).collect::<Vec<_>>());
    let order_anova = pick(|s| s.anova_t);
    let order_glr = pick(|s| s.gamma_glr);
    let order_known_shape = pick(|s| s.known_shape);
    let orderings_agree = order_anova == order_glr && order_glr == order_known_shape;
    let majorization = statistics
        .iter()
        .map(|a| {
            statistics
                .iter()
                .map(|b| majorizes(&a.normalized_means, &b.normalized_means))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingReport {
        statistics,
        order_anova,
        order_glr,
        order_known_shape,
        orderings_agree,
        majorization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::GroupSample;

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&[3.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap());
        assert!(!majorizes(&[1.0, 1.0, 1.0], &[3.0, 0.0, 0.0]).unwrap());
        assert!(majorizes(&[2.0, 1.0], &[1.0, 2.0]).unwrap());
        // different totals never majorize
        assert!(!majorizes(&[3.0, 1.0], &[1.0, 1.0]).unwrap());
        // incomparable pair
        assert!(!majorizes(&[4.0, 1.0, 1.0], &[3.0, 3.0, 0.0]).unwrap());
        assert!(!majorizes(&[3.0, 3.0, 0.0], &[4.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn identical_scalings_tie() {
        let groups: Vec<_> = (0..4)
            .map(|i| GroupSample::unnamed(i, vec![1.0 + i as f64, 2.0, 2.5 + i as f64 * 0.1]).unwrap())
            .collect();
        let a = ScaledDataset::unscaled("a", &groups).unwrap();
        let mut b = a.clone();
        b.index_name = "b".into();
        let r = rank_indices(&[a, b], 2.7).unwrap();
        assert!(r.orderings_agree);
        assert_eq!(r.statistics[0].anova_t, r.statistics[1].anova_t);
        assert!(r.majorization[0][1] && r.majorization[1][0]);
    }
}
