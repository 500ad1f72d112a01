//! Synthetic stand-in for the neuronal and behavioural recordings: random
//! image rate vectors plus Gamma decision times whose mean is inversely
//! proportional to a chosen dissimilarity index.

use asht_core::io::{ImagePair, ImageRates, TimeRecord};
use asht_core::poisson::RateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, StandardNormal};

use crate::error::{CliError, CliResult};
use crate::indices::{compute_indices, IndexKind, IndexRow};

/// Subjects are assigned in blocks of this many consecutive samples.
const SAMPLES_PER_SUBJECT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Number of ordered image pairs (groups); must be even, since each
    /// unordered pair contributes both orderings.
    pub groups: usize,
    /// Decision times per group.
    pub samples: usize,
    pub neurons: usize,
    pub shape: f64,
    pub w: usize,
    pub slot: f64,
    /// Median baseline firing rate (spikes/s).
    pub base_rate: f64,
    /// Index the times are generated from.
    pub generative_index: IndexKind,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            groups: 24,
            samples: 72,
            neurons: 50,
            shape: 2.7,
            w: 6,
            slot: 0.25,
            base_rate: 10.0,
            generative_index: IndexKind::DTilde,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub rates: Vec<ImageRates>,
    pub pairs: Vec<ImagePair>,
    pub times: Vec<TimeRecord>,
    /// Indices of every pair, in `pairs` order.
    pub indices: Vec<IndexRow>,
}

impl SynthParams {
    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.groups < 4 || !self.groups.is_multiple_of(2) {
            return bad(format!("groups must be an even number >= 4, got {}", self.groups));
        }
        if self.samples < 2 {
            return bad(format!("samples must be >= 2, got {}", self.samples));
        }
        if self.neurons == 0 {
            return bad("neurons must be >= 1".into());
        }
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return bad(format!("shape must be positive, got {}", self.shape));
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return bad(format!("base_rate must be positive, got {}", self.base_rate));
        }
        Ok(())
    }
}

/// Rates: neuron `m` has a log-normal baseline shared across images; image
/// `i` scales it by a gain in `[0.3, 3]` and a per-neuron log-normal
/// modulation, so images differ both in overall drive and in pattern.
fn synth_rates(p: &SynthParams, rng: &mut ChaCha8Rng) -> CliResult<Vec<ImageRates>> {
    let base = LogNormal::new(p.base_rate.ln(), 0.5).expect("valid log-normal");
    let baseline: Vec<f64> = (0..p.neurons).map(|_| base.sample(rng)).collect();
    (0..p.groups)
        .map(|i| {
            let gain = rng.random_range(0.3..=3.0);
            let rates = baseline
                .iter()
                .map(|b| {
                    let z: f64 = StandardNormal.sample(rng);
                    b * gain * (0.5 * z).exp()
                })
                .collect();
            Ok(ImageRates {
                image_id: format!("img{:02}", i + 1),
                rates: RateVector::new(rates)?,
            })
        })
        .collect()
}

fn pair_id(p: &ImagePair) -> String {
    format!("{}-{}", p.oddball_id, p.distractor_id)
}

pub fn synthesize(p: &SynthParams) -> CliResult<SynthData> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rates = synth_rates(p, &mut rng)?;
    let pairs: Vec<ImagePair> = (0..p.groups / 2)
        .flat_map(|u| {
            let (a, b) = (&rates[2 * u].image_id, &rates[2 * u + 1].image_id);
            [(a, b), (b, a)]
        })
        .map(|(k, l)| ImagePair {
            oddball_id: k.clone(),
            distractor_id: l.clone(),
        })
        .collect();
    let indices = compute_indices(&rates, &pairs, p.w, p.slot)?;
    let gen: Vec<f64> = indices.iter().map(|r| r.get(p.generative_index)).collect();
    if let Some(i) = gen.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Core(asht_core::Error::DegenerateInput(format!(
            "pair {} has {} index {}",
            pair_id(&pairs[i]),
            p.generative_index.name(),
            gen[i]
        ))));
    }
    // Scale so the median pair has a mean decision time of one second.
    let mut sorted = gen.clone();
    sorted.sort_by(f64::total_cmp);
    let time_scale = sorted[sorted.len() / 2];
    let mut times = Vec::with_capacity(p.groups * p.samples);
    for (pair, idx) in pairs.iter().zip(&gen) {
        let mean = time_scale / idx;
        let dist = Gamma::new(p.shape, mean / p.shape).expect("valid gamma");
        let id = pair_id(pair);
        for j in 0..p.samples {
            times.push(TimeRecord {
                pair_id: id.clone(),
                oddball_id: pair.oddball_id.clone(),
                distractor_id: pair.distractor_id.clone(),
                subject: format!("s{}", j / SAMPLES_PER_SUBJECT + 1),
                time_s: dist.sample(&mut rng),
            });
        }
    }
    Ok(SynthData {
        rates,
        pairs,
        times,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_determinism() {
        let p = SynthParams {
            seed: 5,
            ..SynthParams::default()
        };
        let a = synthesize(&p).unwrap();
        assert_eq!(a.rates.len(), 24);
        assert_eq!(a.pairs.len(), 24);
        assert_eq!(a.times.len(), 24 * 72);
        assert_eq!(a.pairs[0].oddball_id, a.pairs[1].distractor_id);
        assert_eq!(a, synthesize(&p).unwrap());
        let b = synthesize(&SynthParams { seed: 6, ..p }).unwrap();
        assert_ne!(a.times, b.times);
    }

    #[test]
    fn rejects_odd_group_count() {
        let p = SynthParams {
            groups: 5,
            ..SynthParams::default()
        };
        assert!(synthesize(&p).is_err());
    }
}
