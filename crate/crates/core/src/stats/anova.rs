use super::{groups::ScaledDataset, mean};
use crate::special::f_sf;
use crate::{Error, Result};

/// One-way ANOVA on the scaled times: `T = Σ_g n(T̄_g − T̿)² / S_p²` and the
/// p-value of `T/(g−1)` under `F(g−1, g(n−1))`.
pub fn anova_statistic(ds: &ScaledDataset) -> Result<(f64, f64)> {
    let g = ds.groups();
    let n = ds.group_size();
    if n < 2 {
        return Err(Error::DegenerateInput(
            "ANOVA needs at least 2 samples per group".into(),
        ));
    }
    let means = ds.group_means();
    let grand = mean(&means);
    let within: f64 = ds
        .scaled
        .iter()
        .zip(&means)
        .map(|(grp, m)| grp.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let df_within = (g * (n - 1)) as f64;
    let pooled = within / df_within;
    if !(pooled > 0.0) {
        return Err(Error::DegenerateInput("zero pooled within-group variance".into()));
    }
    let between: f64 = means.iter().map(|m| n as f64 * (m - grand).powi(2)).sum();
    let t = between / pooled;
    let df_between = (g - 1) as f64;
    Ok((t, f_sf(t / df_between, df_between, df_within)))
}
