//! Correlation and equality-of-means statistics for ranking dissimilarity
//! indices against decision times.
//!
//! A dissimilarity index `diff` explains the behaviour well when the scaled
//! times `τ·diff(R_k, R_l)` have the same mean for every image pair; the
//! three statistics here measure departures from that, smaller being better.

mod anova;
mod correlation;
mod gamma;
mod groups;
mod ranking;

pub use anova::anova_statistic;
pub use correlation::{pearson, Correlation};
pub use gamma::{
    fit_gamma_common_shape, gamma_glrt, gamma_glrt_null_sample, gamma_shape_fit, known_shape_statistic,
    ks_distance_two_sample, ks_statistic_vs_gamma, solve_shape, GammaKsTest, ShapeFit, KS_CALIBRATION_REPLICATES,
};
pub use groups::{GroupSample, ScaledDataset};
pub use ranking::{majorizes, rank_indices, IndexStatistics, RankingReport};

/// Mean of a non-empty slice.
pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n − 1` denominator.
pub(crate) fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}
