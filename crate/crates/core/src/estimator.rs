//! Near-unbiased estimation of the Poisson relative-entropy rate from counts.
//!
//! With `n` slots of `T` seconds, the empirical rate is `R̂ = N / (nT)` where
//! `N` is the total count. Substituting `R̂` into the divergence formula is
//! biased upwards (and infinite when `R̂₂ = 0 < R̂₁`); offsetting the
//! logarithm arguments by `c = 1/(2nT)` removes most of the bias because
//! `E[ln(N + 1/2)] ≈ ln E[N]` for all but very small means.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::ln_gamma;
use crate::{Error, Result};

/// Total count over `n` slots of `slot` seconds, expressed as a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalRate {
    r_hat: f64,
    n: u64,
    slot: f64,
}

impl EmpiricalRate {
    /// `R̂ = count / (n·slot)`.
    pub fn from_count(count: u64, n: u64, slot: f64) -> Result<Self> {
        check_design(n, slot)?;
        Ok(Self {
            r_hat: count as f64 / (n as f64 * slot),
            n,
            slot,
        })
    }

    /// Validates that `r_hat · n · slot` is a whole count.
    pub fn new(r_hat: f64, n: u64, slot: f64) -> Result<Self> {
        check_design(n, slot)?;
        if !(r_hat.is_finite() && r_hat >= 0.0) {
            return Err(Error::invalid(format!(
                "empirical rate must be finite and >= 0, got {r_hat}"
            )));
        }
        let count = r_hat * n as f64 * slot;
        if (count - count.round()).abs() > 1e-6 * count.max(1.0) {
            return Err(Error::invalid(format!(
                "rate {r_hat} over {n} slots of {slot} s implies a non-integral count {count}"
            )));
        }
        Ok(Self { r_hat, n, slot })
    }

    pub fn r_hat(&self) -> f64 {
        self.r_hat
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn slot(&self) -> f64 {
        self.slot
    }

    /// Offset `1/(2nT)` applied inside the logarithms.
    pub fn offset(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.slot)
    }
}

fn check_design(n: u64, slot: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("need at least one slot"));
    }
    if !(slot > 0.0 && slot.is_finite()) {
        return Err(Error::invalid(format!("slot duration must be positive, got {slot}")));
    }
    Ok(())
}

fn check_pair(r1: &EmpiricalRate, r2: &EmpiricalRate) -> Result<()> {
    if r1.n != r2.n || r1.slot != r2.slot {
        return Err(Error::invalid(format!(
            "empirical rates from different designs: (n={}, T={}) vs (n={}, T={})",
            r1.n, r1.slot, r2.n, r2.slot
        )));
    }
    Ok(())
}

/// Offset-corrected estimate of the relative-entropy rate `D(R₁ ‖ R₂)` in
/// nats per second:
/// `[R̂₁·ln((R̂₁ − c)/(R̂₂ + c)) + R̂₂ − R̂₁]⁺` when `R̂₁ ≥ c`, else `R̂₂`.
pub fn kl_rate_estimate(r1: &EmpiricalRate, r2: &EmpiricalRate) -> Result<f64> {
    check_pair(r1, r2)?;
    let c = r1.offset();
    let (a, b) = (r1.r_hat, r2.r_hat);
    if a >= c {
        let v = a * ((a - c) / (b + c)).ln() + b - a;
        Ok(v.max(0.0))
    } else {
        Ok(b)
    }
}

/// Raw substitution estimate, which is infinite when `R̂₂ = 0 < R̂₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PlugIn {
    Finite(f64),
    Infinite,
}

impl PlugIn {
    /// `f64::INFINITY` for the infinite case.
    pub fn value(self) -> f64 {
        match self {
            PlugIn::Finite(v) => v,
            PlugIn::Infinite => f64::INFINITY,
        }
    }
}

/// `R̂₁·ln(R̂₁/R̂₂) − R̂₁ + R̂₂` with `0·ln 0 = 0`.
pub fn plug_in_estimate(r1: &EmpiricalRate, r2: &EmpiricalRate) -> Result<PlugIn> {
    check_pair(r1, r2)?;
    let (a, b) = (r1.r_hat, r2.r_hat);
    if a == 0.0 {
        return Ok(PlugIn::Finite(b));
    }
    if b == 0.0 {
        return Ok(PlugIn::Infinite);
    }
    Ok(PlugIn::Finite(a * (a / b).ln() - a + b))
}

const TAIL_MASS: f64 = 1e-12;

/// `E[ln(N + θ)] − ln μ` for `N ~ Poisson(μ)`, by exact pmf summation.
pub fn offset_bias(theta: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("Poisson mean must be positive, got {mu}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("offset must be positive, got {theta}")));
    }
    let lo = (mu - 40.0 * mu.sqrt() - 40.0).max(0.0).floor() as u64;
    let hi = (mu + 40.0 * mu.sqrt() + 40.0).ceil() as u64;
    let ln_mu = mu.ln();
    let (mut mass, mut acc) = (0.0, 0.0);
    for k in lo..=hi {
        let kf = k as f64;
        let p = (kf * ln_mu - mu - ln_gamma(kf + 1.0)).exp();
        mass += p;
        acc += p * (kf + theta).ln();
    }
    if (1.0 - mass).abs() > TAIL_MASS * 1e3 {
        return Err(Error::NumericFailure(format!(
            "Poisson({mu}) series captured mass {mass}, tail not negligible"
        )));
    }
    Ok(acc / mass - ln_mu)
}

/// Offset `θ* ∈ (0, 2)` solving `E[ln(N + θ)] = ln E[N]` for
/// `N ~ Poisson(R·n·T)`; deterministic (no sampling).
pub fn optimal_offset(rate: f64, n: u64, slot: f64) -> Result<f64> {
    check_design(n, slot)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    let mu = rate * n as f64 * slot;
    let (mut lo, mut hi) = (1e-12, 2.0);
    if offset_bias(lo, mu)? > 0.0 || offset_bias(hi, mu)? < 0.0 {
        return Err(Error::NumericFailure(format!(
            "no offset in (0, 2) is unbiased at mean {mu}"
        )));
    }
    // E[ln(N + θ)] is increasing in θ
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if offset_bias(mid, mu)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NumericFailure(format!(
        "offset bisection did not converge at mean {mu}"
    )))
}

/// Monte Carlo bias of [`kl_rate_estimate`] at one `(R₁, R₂)` grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCell {
    pub r1: f64,
    pub r2: f64,
    pub true_kl: f64,
    pub mean_est: f64,
    pub bias: f64,
    pub se: f64,
    pub replicates: usize,
    /// Mean plug-in estimate; infinite if any replicate was infinite.
    pub mean_plug_in: f64,
}

/// Minimum replicates per cell accepted by [`bias_surface`].
pub const MIN_BIAS_REPLICATES: usize = 10_000;

/// Per-cell Monte Carlo bias of the corrected estimator; cell `c` uses
/// seed `seed + c`.
pub fn bias_surface(grid: &[(f64, f64)], n: u64, slot: f64, replicates: usize, seed: u64) -> Result<Vec<BiasCell>> {
    check_design(n, slot)?;
    if replicates < MIN_BIAS_REPLICATES {
        return Err(Error::invalid(format!(
            "need at least {MIN_BIAS_REPLICATES} replicates per cell, got {replicates}"
        )));
    }
    grid.par_iter()
        .enumerate()
        .map(|(c, &(r1, r2))| bias_cell(r1, r2, n, slot, replicates, seed.wrapping_add(c as u64)))
        .collect()
}

fn bias_cell(r1: f64, r2: f64, n: u64, slot: f64, replicates: usize, seed: u64) -> Result<BiasCell> {
    if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::invalid(format!("grid rates must be positive, got ({r1}, {r2})")));
    }
    let scale = n as f64 * slot;
    let d1 = Poisson::new(r1 * scale).map_err(|e| Error::invalid(e.to_string()))?;
    let d2 = Poisson::new(r2 * scale).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq, mut plug) = (0.0, 0.0, 0.0);
    for _ in 0..replicates {
        let e1 = EmpiricalRate::from_count(d1.sample(&mut rng) as u64, n, slot)?;
        let e2 = EmpiricalRate::from_count(d2.sample(&mut rng) as u64, n, slot)?;
        let est = kl_rate_estimate(&e1, &e2)?;
        sum += est;
        sum_sq += est * est;
        plug += plug_in_estimate(&e1, &e2)?.value();
    }
    let reps = replicates as f64;
    let mean = sum / reps;
    let var = ((sum_sq - reps * mean * mean) / (reps - 1.0)).max(0.0);
    let true_kl = r1 * (r1 / r2).ln() - r1 + r2;
    Ok(BiasCell {
        r1,
        r2,
        true_kl,
        mean_est: mean,
        bias: mean - true_kl,
        se: (var / reps).sqrt(),
        replicates,
        mean_plug_in: plug / reps,
    })
}
