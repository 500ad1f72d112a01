//! End-to-end ranking: group decision times by image pair, scale them by
//! each dissimilarity index and compare the indices.

use asht_core::io::{group_times, ImagePair, ImageRates, TimeRecord};
use asht_core::stats::{
    gamma_shape_fit, pearson, rank_indices, GammaKsTest, GroupSample, RankingReport, ScaledDataset, ShapeFit,
};
use asht_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::indices::{compute_indices, IndexKind, IndexRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub index: String,
    /// `inv_time_vs_index`: r(1/s̄, index); `time_vs_inv_index`: r(s̄, 1/index).
    pub orientation: String,
    pub r: f64,
    pub p: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub index: String,
    pub anova_t: f64,
    pub anova_p: f64,
    pub gamma_glr: f64,
    pub known_shape: f64,
    /// 1 = best.
    pub rank_anova: usize,
    pub rank_glr: usize,
    pub rank_known_shape: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationRow {
    pub index: String,
    pub other: String,
    /// Normalized group means of `index` majorize those of `other`.
    pub majorizes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMeanRow {
    pub index: String,
    pub pair_id: String,
    pub normalized_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub pair_id: String,
    pub oddball_id: String,
    pub distractor_id: String,
    pub n: usize,
    pub mean_time: f64,
    pub d_tilde: f64,
    pub kl: f64,
    pub chernoff: f64,
    pub l1: f64,
    /// KS distance to a Gamma of the assumed shape (fitted scale).
    pub ks_d: f64,
    pub ks_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFitRow {
    pub slope: f64,
    pub implied_shape: f64,
    pub assumed_shape: f64,
    pub ks_critical: f64,
    pub ks_pass_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct RankAnalysis {
    pub groups: Vec<GroupSample>,
    pub indices: Vec<IndexRow>,
    pub report: RankingReport,
    pub warnings: Vec<String>,
}

/// Group the times, enforce equal group sizes (or truncate to the smallest
/// group when allowed), compute the indices of each pair and rank them.
pub fn analyze(
    rates: &[ImageRates],
    times: &[TimeRecord],
    w: usize,
    slot: f64,
    shape: f64,
    truncate_to_min: bool,
) -> CliResult<RankAnalysis> {
    let mut groups = group_times(times)?;
    let mut warnings = Vec::new();
    let min = groups.iter().map(|g| g.times.len()).min().unwrap_or(0);
    let max = groups.iter().map(|g| g.times.len()).max().unwrap_or(0);
    if min != max {
        let small = groups.iter().find(|g| g.times.len() == min).expect("non-empty");
        let large = groups.iter().find(|g| g.times.len() == max).expect("non-empty");
        if !truncate_to_min {
            return Err(Error::Ingest(format!(
                "unequal group sizes: pair {} has {min} times, pair {} has {max}; \
                 equalize the data or pass --truncate-to-min",
                small.pair_id, large.pair_id
            ))
            .into());
        }
        let dropped: usize = groups.iter().map(|g| g.times.len() - min).sum();
        warnings.push(format!(
            "truncated every group to its first {min} times ({dropped} times dropped)"
        ));
        for g in &mut groups {
            g.times.truncate(min);
        }
    }
    let pairs: Vec<ImagePair> = groups
        .iter()
        .map(|g| ImagePair {
            oddball_id: g.oddball_id.clone(),
            distractor_id: g.distractor_id.clone(),
        })
        .collect();
    let indices = compute_indices(rates, &pairs, w, slot)?;
    let datasets = IndexKind::ALL
        .iter()
        .map(|&k| {
            let f: Vec<f64> = indices.iter().map(|r| r.get(k)).collect();
            ScaledDataset::new(k.name(), &groups, &f).map_err(Into::into)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = rank_indices(&datasets, shape)?;
    Ok(RankAnalysis {
        groups,
        indices,
        report,
        warnings,
    })
}

impl RankAnalysis {
    /// Whether `kind` comes first under all three statistics.
    pub fn ranked_first_by_all(&self, kind: IndexKind) -> bool {
        let r = &self.report;
        let pos = IndexKind::ALL.iter().position(|k| *k == kind).expect("known index");
        r.order_anova[0] == pos && r.order_glr[0] == pos && r.order_known_shape[0] == pos
    }

    pub fn correlations(&self) -> CliResult<Vec<CorrelationRow>> {
        let means: Vec<f64> = self.groups.iter().map(GroupSample::mean).collect();
        let inv_means: Vec<f64> = means.iter().map(|m| 1.0 / m).collect();
        let mut rows = Vec::new();
        for k in IndexKind::ALL {
            let idx: Vec<f64> = self.indices.iter().map(|r| r.get(k)).collect();
            let inv_idx: Vec<f64> = idx.iter().map(|v| 1.0 / v).collect();
            for (orientation, x, y) in [
                ("inv_time_vs_index", &idx, &inv_means),
                ("time_vs_inv_index", &inv_idx, &means),
            ] {
                let c = pearson(x, y)?;
                rows.push(CorrelationRow {
                    index: k.name().into(),
                    orientation: orientation.into(),
                    r: c.r,
                    p: c.p,
                    n_pairs: x.len(),
                });
            }
        }
        Ok(rows)
    }

    pub fn ranking_rows(&self) -> Vec<RankingRow> {
        let r = &self.report;
        let rank_of = |order: &[usize], i: usize| order.iter().position(|&j| j == i).expect("ranked") + 1;
        r.statistics
            .iter()
            .enumerate()
            .map(|(i, s)| RankingRow {
                index: s.index_name.clone(),
                anova_t: s.anova_t,
                anova_p: s.anova_p,
                gamma_glr: s.gamma_glr,
                known_shape: s.known_shape,
                rank_anova: rank_of(&r.order_anova, i),
                rank_glr: rank_of(&r.order_glr, i),
                rank_known_shape: rank_of(&r.order_known_shape, i),
            })
            .collect()
    }

    pub fn majorization_rows(&self) -> Vec<MajorizationRow> {
        let s = &self.report.statistics;
        let mut rows = Vec::new();
        for (a, row) in self.report.majorization.iter().enumerate() {
            for (b, &m) in row.iter().enumerate() {
                if a != b {
                    rows.push(MajorizationRow {
                        index: s[a].index_name.clone(),
                        other: s[b].index_name.clone(),
                        majorizes: m,
                    });
                }
            }
        }
        rows
    }

    pub fn normalized_mean_rows(&self) -> Vec<NormalizedMeanRow> {
        self.report
            .statistics
            .iter()
            .flat_map(|s| {
                s.normalized_means
                    .iter()
                    .zip(&self.groups)
                    .map(|(v, g)| NormalizedMeanRow {
                        index: s.index_name.clone(),
                        pair_id: g.pair_id.clone(),
                        normalized_mean: *v,
                    })
            })
            .collect()
    }

    /// Per-group Gamma KS check and the pooled std-vs-mean shape fit.
    pub fn shape_checks(&self, shape: f64, ks_replicates: usize, seed: u64) -> CliResult<(Vec<GroupRow>, ShapeFitRow)> {
        let n = self.groups[0].times.len();
        let ks = GammaKsTest::calibrate(n, shape, ks_replicates, seed)?;
        let ShapeFit { slope, implied_shape } = gamma_shape_fit(&self.groups)?;
        let rows = self
            .groups
            .iter()
            .zip(&self.indices)
            .map(|(g, ix)| {
                let (ks_d, ks_pass) = ks.test(&g.times)?;
                Ok(GroupRow {
                    pair_id: g.pair_id.clone(),
                    oddball_id: g.oddball_id.clone(),
                    distractor_id: g.distractor_id.clone(),
                    n: g.times.len(),
                    mean_time: g.mean(),
                    d_tilde: ix.d_tilde,
                    kl: ix.kl,
                    chernoff: ix.chernoff,
                    l1: ix.l1,
                    ks_d,
                    ks_pass,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let passed = rows.iter().filter(|r| r.ks_pass).count();
        let fit = ShapeFitRow {
            slope,
            implied_shape,
            assumed_shape: shape,
            ks_critical: ks.critical,
            ks_pass_fraction: passed as f64 / rows.len() as f64,
        };
        Ok((rows, fit))
    }

    /// Human-readable table in the layout of the paper's ranking table.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>12} {:>12} {:>12} {:>12}   ranks (anova/glr/known)\n",
            "index", "ANOVA T", "p-value", "Gamma GLR", "AM/GM"
        );
        for r in self.ranking_rows() {
            s.push_str(&format!(
                "{:<10} {:>12.4} {:>12.3e} {:>12.5} {:>12.5}   {}/{}/{}\n",
                r.index, r.anova_t, r.anova_p, r.gamma_glr, r.known_shape, r.rank_anova, r.rank_glr, r.rank_known_shape
            ));
        }
        match self.report.consensus() {
            Some(order) => s.push_str(&format!("consensus order: {}\n", order.join(" > "))),
            None => s.push_str("the three statistics disagree on the order\n"),
        }
        s
    }
}
