use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use super::{groups::GroupSample, groups::ScaledDataset, mean, variance};
use crate::special::{digamma, gamma_cdf, ln_gamma, trigamma};
use crate::{Error, Result};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// Solve `ln α − ψ(α) = s` for the Gamma shape `α`, by Newton iteration from
/// `init`.
pub fn solve_shape(s: f64, init: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "log-mean minus mean-log is {s}; the data carry no spread to fit a Gamma shape"
        )));
    }
    let mut alpha = if init.is_finite() && init > 0.0 {
        init
    } else {
        // closed-form approximation, accurate to a few percent
        (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s)
    };
    let mut trace = Vec::new();
    for _ in 0..NEWTON_MAX_ITER {
        let f = alpha.ln() - digamma(alpha) - s;
        let df = 1.0 / alpha - trigamma(alpha);
        let mut next = alpha - f / df;
        if !(next > 0.0) {
            next = alpha / 2.0;
        }
        let delta = (next - alpha).abs();
        trace.push(next);
        alpha = next;
        if delta < NEWTON_TOL * alpha.max(1.0) {
            return Ok(alpha);
        }
    }
    let tail = &trace[trace.len().saturating_sub(5)..];
    Err(Error::NumericFailure(format!(
        "Gamma shape Newton iteration did not converge for s = {s}; last iterates {tail:?}"
    )))
}

/// Maximum-likelihood Gamma fit with one shape shared by all groups and a
/// scale per group, plus the per-group summaries the profile likelihood
/// needs.
struct CommonShape {
    shape: f64,
    /// Per group: `(n_g, mean, mean of logs)`.
    groups: Vec<(f64, f64, f64)>,
}

impl CommonShape {
    fn summarise(groups: &[&[f64]]) -> Vec<(f64, f64, f64)> {
        groups
            .iter()
            .map(|g| {
                (
                    g.len() as f64,
                    mean(g),
                    g.iter().map(|x| x.ln()).sum::<f64>() / g.len() as f64,
                )
            })
            .collect()
    }

    fn fit(groups: &[&[f64]]) -> Result<Self> {
        let summary = Self::summarise(groups);
        let total: f64 = summary.iter().map(|g| g.0).sum();
        let s = summary.iter().map(|&(n, m, ml)| n * (m.ln() - ml)).sum::<f64>() / total;
        // method of moments: average squared coefficient of variation
        let cv2 = groups
            .iter()
            .filter(|g| g.len() > 1)
            .map(|g| variance(g) / mean(g).powi(2))
            .sum::<f64>()
            / groups.len() as f64;
        let shape = solve_shape(s, 1.0 / cv2)?;
        Ok(Self { shape, groups: summary })
    }

    /// Profile log-likelihood at shape `a` with each group's scale at its MLE `mean/a`.
    fn profile(&self, a: f64) -> f64 {
        self.groups
            .iter()
            .map(|&(n, m, ml)| n * ((a - 1.0) * ml - a - a * (m / a).ln() - ln_gamma(a)))
            .sum()
    }
}

/// Common-shape MLE: `(shape, per-group scales)`.
pub fn fit_gamma_common_shape(groups: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
    let fit = CommonShape::fit(&refs)?;
    let scales = fit.groups.iter().map(|g| g.1 / fit.shape).collect();
    Ok((fit.shape, scales))
}

fn am_over_gm(means: &[f64]) -> Result<f64> {
    if let Some(m) = means.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::DegenerateInput(format!("group mean {m} is not positive")));
    }
    let am = mean(means);
    let log_gm = means.iter().map(|m| m.ln()).sum::<f64>() / means.len() as f64;
    Ok((am.ln() - log_gm).max(0.0))
}

/// Gamma generalised likelihood ratio for equal group scales,
/// `(1/(n·g))·[ln L̂₁ − ln L̂₀]` where `L̂₀` fits one shape and one scale to
/// all times and `L̂₁` one shape and a scale per group.
///
/// Evaluated as `[ℓ₁(α̂₁) − ℓ₁(α̂₀)]/(ng) + α̂₀·ln(AM/GM)` of the group means,
/// a sum of two non-negative terms, so the statistic is never negative.
pub fn gamma_glrt(ds: &ScaledDataset) -> Result<f64> {
    let refs: Vec<&[f64]> = ds.scaled.iter().map(Vec::as_slice).collect();
    let total = refs.iter().map(|g| g.len()).sum::<usize>() as f64;
    let pooled: Vec<f64> = ds.scaled.iter().flatten().copied().collect();
    let h0 = CommonShape::fit(&[&pooled])?;
    let h1 = CommonShape::fit(&refs)?;
    let shape_gain = (h1.profile(h1.shape) - h1.profile(h0.shape)).max(0.0) / total;
    Ok(shape_gain + h0.shape * am_over_gm(&ds.group_means())?)
}

/// Known-shape statistic `s·ln(AM/GM)` of the group means.
pub fn known_shape_statistic(ds: &ScaledDataset, shape: f64) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::invalid(format!("shape must be positive, got {shape}")));
    }
    Ok(shape * am_over_gm(&ds.group_means())?)
}

/// Sorted Monte Carlo sample of [`gamma_glrt`] under equal means: `g`
/// groups of `n` draws from Gamma(shape, mean/shape); replicate `r` uses
/// seed `seed + r`.
pub fn gamma_glrt_null_sample(
    g: usize,
    n: usize,
    shape: f64,
    mean: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if g < 2 || n < 2 {
        return Err(Error::invalid(format!("need g >= 2 and n >= 2, got g={g}, n={n}")));
    }
    let dist = Gamma::new(shape, mean / shape).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let groups = (0..g)
                .map(|i| GroupSample::unnamed(i, (0..n).map(|_| dist.sample(&mut rng)).collect()))
                .collect::<Result<Vec<_>>>()?;
            gamma_glrt(&ScaledDataset::unscaled("null", &groups)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Least-squares slope through the origin of per-group (mean, std) and the
/// shape it implies, `1/slope²` (a Gamma's std/mean ratio is `1/√shape`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeFit {
    pub slope: f64,
    pub implied_shape: f64,
}

pub fn gamma_shape_fit(groups: &[GroupSample]) -> Result<ShapeFit> {
    if groups.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.times.len() < 2) {
        return Err(Error::invalid(format!("group {} needs at least 2 samples", g.pair_id)));
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for g in groups {
        let m = g.mean();
        sxy += m * variance(&g.times).sqrt();
        sxx += m * m;
    }
    let slope = sxy / sxx;
    Ok(ShapeFit {
        slope,
        implied_shape: 1.0 / (slope * slope),
    })
}

/// One-sample KS statistic of `times` against Gamma(shape, mean/shape) with
/// the sample mean plugged in.
pub fn ks_statistic_vs_gamma(times: &[f64], shape: f64) -> f64 {
    let mut x = times.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let scale = mean(&x) / shape;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = gamma_cdf(v, shape, scale);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS test against a Gamma of known shape and estimated scale, with the 5%
/// critical value calibrated by simulation (the textbook table assumes a
/// fully specified null and would be anti-conservative here).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaKsTest {
    pub n: usize,
    pub shape: f64,
    pub critical: f64,
    pub replicates: usize,
}

/// Calibration replicates used unless a caller chooses otherwise.
pub const KS_CALIBRATION_REPLICATES: usize = 10_000;

impl GammaKsTest {
    /// The statistic is scale-invariant, so the critical value depends only
    /// on `n` and the shape.
    pub fn calibrate(n: usize, shape: f64, replicates: usize, seed: u64) -> Result<Self> {
        if n < 10 {
            return Err(Error::invalid(format!("KS test needs at least 10 samples, got {n}")));
        }
        if replicates < 100 {
            return Err(Error::invalid(format!(
                "need at least 100 calibration replicates, got {replicates}"
            )));
        }
        let dist = Gamma::new(shape, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
        let mut stats: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
                let x: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
                ks_statistic_vs_gamma(&x, shape)
            })
            .collect();
        stats.sort_by(f64::total_cmp);
        let idx = ((0.95 * replicates as f64).ceil() as usize).clamp(1, replicates) - 1;
        Ok(Self {
            n,
            shape,
            critical: stats[idx],
            replicates,
        })
    }

    /// `(D, passes at 5%)`.
    pub fn test(&self, times: &[f64]) -> Result<(f64, bool)> {
        if times.len() != self.n {
            return Err(Error::invalid(format!(
                "calibrated for n = {}, got {} samples",
                self.n,
                times.len()
            )));
        }
        let d = ks_statistic_vs_gamma(times, self.shape);
        Ok((d, d <= self.critical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn groups(data: &[&[f64]]) -> Vec<GroupSample> {
        data.iter()
            .enumerate()
            .map(|(i, t)| GroupSample::unnamed(i, t.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn shape_solver_reference() {
        // root of ln a − ψ(a) = s for this sample (scipy brentq)
        let x = [0.5, 1.2, 2.3, 0.8, 1.7, 3.1];
        let s = mean(&x).ln() - x.iter().map(|v: &f64| v.ln()).sum::<f64>() / 6.0;
        let a = solve_shape(s, 1.0).unwrap();
        assert_relative_eq!(a, 2.9889934883877567, max_relative = 1e-8);
        // any positive start converges to the same root
        for init in [0.01, 0.5, 50.0, f64::NAN] {
            assert_relative_eq!(solve_shape(s, init).unwrap(), a, max_relative = 1e-9);
        }
        assert!(matches!(solve_shape(0.0, 1.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn known_shape_hand_value() {
        let g = groups(&[&[0.5, 1.5], &[3.0, 5.0]]);
        let ds = ScaledDataset::unscaled("x", &g).unwrap();
        assert_abs_diff_eq!(
            known_shape_statistic(&ds, 2.7).unwrap(),
            2.7 * (2.5f64 / 2.0).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn glrt_matches_direct_likelihoods() {
        let g = groups(&[&[0.5, 1.2, 2.3, 0.8], &[1.7, 3.1, 2.2, 4.0], &[0.3, 0.9, 0.4, 1.1]]);
        let ds = ScaledDataset::unscaled("x", &g).unwrap();
        let glr = gamma_glrt(&ds).unwrap();

        // direct evaluation of the two maximised log-likelihoods
        let ll = |x: &[f64], a: f64, b: f64| -> f64 {
            x.iter()
                .map(|v| (a - 1.0) * v.ln() - v / b - a * b.ln() - ln_gamma(a))
                .sum()
        };
        let pooled: Vec<f64> = ds.scaled.concat();
        let (a0, b0) = fit_gamma_common_shape(std::slice::from_ref(&pooled)).unwrap();
        let (a1, b1) = fit_gamma_common_shape(&ds.scaled).unwrap();
        let l0 = ll(&pooled, a0, b0[0]);
        let l1: f64 = ds.scaled.iter().zip(&b1).map(|(x, b)| ll(x, a1, *b)).sum();
        assert_relative_eq!(glr, (l1 - l0) / 12.0, max_relative = 1e-9);
        assert!(glr > 0.0);
    }

    #[test]
    fn glrt_scale_invariant() {
        let g = groups(&[&[0.5, 1.2, 2.3, 0.8], &[1.7, 3.1, 2.2, 4.0]]);
        let ds = ScaledDataset::unscaled("x", &g).unwrap();
        let ds2 = ScaledDataset::new("x", &g, &[7.5, 7.5]).unwrap();
        assert_relative_eq!(gamma_glrt(&ds).unwrap(), gamma_glrt(&ds2).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_distance_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_distance_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_abs_diff_eq!(
            ks_distance_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn shape_fit_constant_groups() {
        let g = groups(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        assert_eq!(gamma_shape_fit(&g).unwrap().slope, 0.0);
        assert!(gamma_shape_fit(&g[..2]).is_err());
    }

    #[test]
    fn ks_statistic_reference() {
        // scipy.stats.kstest(x, 'gamma', args=(2.7, 0, mean(x)/2.7)).statistic
        let x = [0.5, 1.2, 2.3, 0.8, 1.7, 3.1, 0.9, 1.4, 2.0, 0.6];
        assert_relative_eq!(ks_statistic_vs_gamma(&x, 2.7), 0.10214830669256939, max_relative = 1e-9);
    }
}
