//! Vector Poisson point-process observation model.
//!
//! An image is represented by the mean firing rates of `d` independent
//! neurons. Observing the image for `T` seconds yields one spike count per
//! neuron; for homogeneous rates the counts are a sufficient statistic, so
//! spike times are never materialised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rates below this value (spikes/s) are replaced by it in every divergence
/// and log-likelihood computation.
pub const RATE_FLOOR: f64 = 1e-6;

/// Per-neuron mean firing rates in spikes per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("rate vector must have at least one neuron"));
        }
        if let Some((m, r)) = rates.iter().enumerate().find(|(_, r)| !r.is_finite() || **r < 0.0) {
            return Err(Error::invalid(format!(
                "rate {m} is {r}; rates must be finite and >= 0"
            )));
        }
        Ok(Self(rates))
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    /// Neuron count `d`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Copy with every rate raised to at least [`RATE_FLOOR`].
    pub fn floored(&self) -> Self {
        Self(self.0.iter().map(|r| r.max(RATE_FLOOR)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|r| r * c).collect())
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {} neurons",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// Spike counts of `d` neurons observed over `duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CountObservation {
    pub counts: Vec<u64>,
    duration: f64,
}

impl CountObservation {
    pub fn new(counts: Vec<u64>, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be positive, got {duration}")));
        }
        Ok(Self { counts, duration })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// Draw one count per neuron, `N_m ~ Poisson(rates[m] · duration)`.
pub fn sample_counts_with<R: Rng + ?Sized>(rv: &RateVector, duration: f64, rng: &mut R) -> Result<CountObservation> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    let counts = rv.rates().iter().map(|&r| poisson_draw(r * duration, rng)).collect();
    CountObservation::new(counts, duration)
}

/// Seeded variant of [`sample_counts_with`]; identical seeds give identical counts.
pub fn sample_counts(rv: &RateVector, duration: f64, seed: u64) -> Result<CountObservation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(rv, duration, &mut rng)
}

/// One Poisson variate with the given mean. A zero mean always yields zero.
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}

fn check_positive(rv: &RateVector, what: &str) -> Result<()> {
    if let Some((m, r)) = rv.rates().iter().enumerate().find(|(_, r)| **r <= 0.0) {
        return Err(Error::invalid(format!(
            "{what} rate {m} is {r}; apply the rate floor before computing log-likelihoods"
        )));
    }
    Ok(())
}

/// Log-likelihood ratio of `obs` under rates `num` against rates `den`:
/// `Σ_m [N_m · ln(num_m / den_m) − T · (num_m − den_m)]`.
pub fn llr_increment(obs: &CountObservation, num: &RateVector, den: &RateVector) -> Result<f64> {
    num.check_same_dim(den)?;
    if obs.counts.len() != num.dim() {
        return Err(Error::invalid(format!(
            "observation has {} counts, model has {} neurons",
            obs.counts.len(),
            num.dim()
        )));
    }
    check_positive(num, "numerator")?;
    check_positive(den, "denominator")?;
    let t = obs.duration();
    Ok(obs
        .counts
        .iter()
        .zip(num.rates().iter().zip(den.rates()))
        .map(|(&n, (&a, &b))| n as f64 * (a / b).ln() - t * (a - b))
        .sum())
}

fn kl_term(p: f64, q: f64) -> f64 {
    p * (p / q).ln() - p + q
}

/// Relative-entropy rate (nats/s) of the Poisson process with rates `p`
/// with respect to the one with rates `q`, after flooring both.
pub fn kl_rate(p: &RateVector, q: &RateVector) -> Result<f64> {
    p.check_same_dim(q)?;
    let v: f64 = p
        .rates()
        .iter()
        .zip(q.rates())
        .map(|(&a, &b)| kl_term(a.max(RATE_FLOOR), b.max(RATE_FLOOR)))
        .sum();
    // each term is >= 0 mathematically; rounding can leave -1e-17
    Ok(v.max(0.0))
}

/// Chernoff exponent at mixing parameter `s`:
/// `Σ_m [s·p_m + (1−s)·q_m − p_m^s · q_m^{1−s}]`, on floored rates.
pub fn chernoff_objective(p: &RateVector, q: &RateVector, s: f64) -> f64 {
    p.rates()
        .iter()
        .zip(q.rates())
        .map(|(&a, &b)| {
            let (a, b) = (a.max(RATE_FLOOR), b.max(RATE_FLOOR));
            s * a + (1.0 - s) * b - a.powf(s) * b.powf(1.0 - s)
        })
        .sum()
}

/// Maximiser and maximum of the Chernoff exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffPoint {
    pub s: f64,
    pub rate: f64,
}

const GOLDEN_TOL: f64 = 1e-9;

/// Chernoff information rate (nats/s) and its optimal `s`.
///
/// The objective is concave in `s`, so golden-section search on `[0, 1]`
/// finds the global maximum.
pub fn chernoff_point(p: &RateVector, q: &RateVector) -> Result<ChernoffPoint> {
    p.check_same_dim(q)?;
    if p.floored() == q.floored() {
        // flat objective; avoid reporting rounding noise as information
        return Ok(ChernoffPoint { s: 0.5, rate: 0.0 });
    }
    let f = |s: f64| chernoff_objective(p, q, s);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iters = 0;
    while (b - a) > GOLDEN_TOL {
        iters += 1;
        if iters > 200 || !fc.is_finite() || !fd.is_finite() {
            return Err(Error::NumericFailure(format!(
                "Chernoff search stalled after {iters} iterations on [{a}, {b}] (f = {fc}, {fd})"
            )));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let s = 0.5 * (a + b);
    // the endpoints are 0 by construction; never report less than that
    let rate = f(s).max(0.0);
    Ok(ChernoffPoint { s, rate })
}

/// Chernoff information rate between two Poisson processes (nats/s).
pub fn chernoff_rate(p: &RateVector, q: &RateVector) -> Result<f64> {
    chernoff_point(p, q).map(|c| c.rate)
}

/// Mean absolute rate difference per neuron (spikes/s/neuron).
pub fn l1_index(p: &RateVector, q: &RateVector) -> Result<f64> {
    p.check_same_dim(q)?;
    let s: f64 = p.rates().iter().zip(q.rates()).map(|(a, b)| (a - b).abs()).sum();
    Ok(s / p.dim() as f64)
}
