//! Dissimilarity indices for ordered image pairs, from rates or from raw
//! spike counts.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use asht_core::estimator::{kl_rate_estimate, EmpiricalRate};
use asht_core::io::{ImageCounts, ImagePair, ImageRates};
use asht_core::maximin::{d_tilde, d_tilde_from_rates};
use asht_core::poisson::{chernoff_rate, kl_rate, l1_index, RateVector};
use asht_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    DTilde,
    Kl,
    Chernoff,
    L1,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [IndexKind::DTilde, IndexKind::Kl, IndexKind::Chernoff, IndexKind::L1];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::DTilde => "d_tilde",
            IndexKind::Kl => "kl",
            IndexKind::Chernoff => "chernoff",
            IndexKind::L1 => "l1",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown index `{s}` (expected d_tilde, kl, chernoff or l1)"))
    }
}

/// All four indices of one ordered pair. `kl` and `chernoff` are per neuron
/// (nats/s/neuron) so every column is comparable across populations of
/// different sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub oddball_id: String,
    pub distractor_id: String,
    pub d: usize,
    pub d_tilde: f64,
    pub kl: f64,
    pub chernoff: f64,
    pub l1: f64,
}

impl IndexRow {
    pub fn get(&self, kind: IndexKind) -> f64 {
        match kind {
            IndexKind::DTilde => self.d_tilde,
            IndexKind::Kl => self.kl,
            IndexKind::Chernoff => self.chernoff,
            IndexKind::L1 => self.l1,
        }
    }
}

/// Every ordered pair of distinct images, in file order.
pub fn all_ordered_pairs(rates: &[ImageRates]) -> Vec<ImagePair> {
    let mut out = Vec::new();
    for a in rates {
        for b in rates {
            if a.image_id != b.image_id {
                out.push(ImagePair {
                    oddball_id: a.image_id.clone(),
                    distractor_id: b.image_id.clone(),
                });
            }
        }
    }
    out
}

fn lookup<'a, T>(map: &HashMap<&str, &'a T>, id: &str, row: usize) -> CliResult<&'a T> {
    map.get(id)
        .copied()
        .ok_or_else(|| Error::Ingest(format!("pair row {}: image `{id}` is not in the rates table", row + 1)).into())
}

fn check_dims(a: usize, b: usize, pair: &ImagePair, row: usize) -> CliResult<()> {
    if a != b {
        return Err(Error::Ingest(format!(
            "pair row {} ({}, {}): dimension mismatch, {a} vs {b} neurons",
            row + 1,
            pair.oddball_id,
            pair.distractor_id
        ))
        .into());
    }
    Ok(())
}

pub fn compute_indices(rates: &[ImageRates], pairs: &[ImagePair], w: usize, slot: f64) -> CliResult<Vec<IndexRow>> {
    let map: HashMap<&str, &RateVector> = rates.iter().map(|r| (r.image_id.as_str(), &r.rates)).collect();
    pairs
        .iter()
        .enumerate()
        .map(|(row, pair)| {
            let p = lookup(&map, &pair.oddball_id, row)?;
            let q = lookup(&map, &pair.distractor_id, row)?;
            check_dims(p.dim(), q.dim(), pair, row)?;
            let d = p.dim() as f64;
            Ok(IndexRow {
                oddball_id: pair.oddball_id.clone(),
                distractor_id: pair.distractor_id.clone(),
                d: p.dim(),
                d_tilde: d_tilde(p, q, w, slot)?,
                kl: kl_rate(p, q)? / d,
                chernoff: chernoff_rate(p, q)? / d,
                l1: l1_index(p, q)?,
            })
        })
        .collect()
}

/// Per-neuron totals and slot count of one image's counts.
fn totals(c: &ImageCounts) -> CliResult<(Vec<u64>, u64)> {
    let d = c.slots[0].len();
    let mut sum = vec![0u64; d];
    for s in &c.slots {
        if s.len() != d {
            return Err(Error::Ingest(format!("image {}: ragged count rows", c.image_id)).into());
        }
        for (acc, v) in sum.iter_mut().zip(s) {
            *acc += v;
        }
    }
    Ok((sum, c.slots.len() as u64))
}

/// Indices from raw counts: KL and `D̃` use the offset-corrected estimator
/// neuron by neuron; Chernoff and L¹ use the empirical rates directly.
pub fn compute_indices_from_counts(
    counts: &[ImageCounts],
    pairs: &[ImagePair],
    w: usize,
    slot: f64,
) -> CliResult<Vec<IndexRow>> {
    let map: HashMap<&str, &ImageCounts> = counts.iter().map(|c| (c.image_id.as_str(), c)).collect();
    pairs
        .iter()
        .enumerate()
        .map(|(row, pair)| {
            let ck = lookup(&map, &pair.oddball_id, row)?;
            let cl = lookup(&map, &pair.distractor_id, row)?;
            let (sk, nk) = totals(ck)?;
            let (sl, nl) = totals(cl)?;
            check_dims(sk.len(), sl.len(), pair, row)?;
            if nk != nl {
                return Err(Error::Ingest(format!(
                    "pair row {}: images {} and {} have {nk} and {nl} slots; the estimator needs equal counts",
                    row + 1,
                    pair.oddball_id,
                    pair.distractor_id
                ))
                .into());
            }
            let emp = |s: &[u64]| -> CliResult<Vec<EmpiricalRate>> {
                s.iter()
                    .map(|&c| EmpiricalRate::from_count(c, nk, slot).map_err(Into::into))
                    .collect()
            };
            let (ek, el) = (emp(&sk)?, emp(&sl)?);
            let kl_sum = |a: &[EmpiricalRate], b: &[EmpiricalRate]| -> CliResult<f64> {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| kl_rate_estimate(x, y).map_err(Into::into))
                    .sum()
            };
            let (dkl, dlk) = (kl_sum(&ek, &el)?, kl_sum(&el, &ek)?);
            let rv = |e: &[EmpiricalRate]| RateVector::new(e.iter().map(EmpiricalRate::r_hat).collect());
            let (p, q) = (rv(&ek)?, rv(&el)?);
            let d = sk.len();
            Ok(IndexRow {
                oddball_id: pair.oddball_id.clone(),
                distractor_id: pair.distractor_id.clone(),
                d,
                d_tilde: d_tilde_from_rates(dkl, dlk, w, d)?,
                kl: dkl / d as f64,
                chernoff: chernoff_rate(&p, &q)? / d as f64,
                l1: l1_index(&p, &q)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn img(id: &str, r: &[f64]) -> ImageRates {
        ImageRates {
            image_id: id.into(),
            rates: RateVector::new(r.to_vec()).unwrap(),
        }
    }

    #[test]
    fn single_neuron_reference_pair() {
        let rates = [img("a", &[2.0]), img("b", &[1.0])];
        let pairs = [ImagePair {
            oddball_id: "a".into(),
            distractor_id: "b".into(),
        }];
        let row = &compute_indices(&rates, &pairs, 6, 1.0).unwrap()[0];
        assert_abs_diff_eq!(row.d_tilde, 0.16626, epsilon = 1e-4);
        assert_abs_diff_eq!(row.kl, 2.0 * 2f64.ln() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row.l1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_images_are_zero() {
        let rates = [img("a", &[3.0, 7.0]), img("b", &[3.0, 7.0])];
        let row = &compute_indices(&rates, &all_ordered_pairs(&rates), 6, 0.25).unwrap()[0];
        for k in IndexKind::ALL {
            assert_eq!(row.get(k), 0.0, "{k}");
        }
    }

    #[test]
    fn missing_image_and_dimension_mismatch() {
        let rates = [img("a", &[1.0]), img("b", &[1.0, 2.0])];
        let pair = |k: &str, l: &str| ImagePair {
            oddball_id: k.into(),
            distractor_id: l.into(),
        };
        let e = compute_indices(&rates, &[pair("a", "zz")], 6, 0.25).unwrap_err();
        assert!(e.to_string().contains("zz"), "{e}");
        let e = compute_indices(&rates, &[pair("a", "b")], 6, 0.25).unwrap_err();
        assert!(e.to_string().contains("dimension"), "{e}");
    }

    #[test]
    fn counts_path_tracks_rates_path() {
        // counts equal to the expected values: the estimator then sits close
        // to the rate-based indices
        let n = 400u64;
        let slot = 0.25;
        let mk = |id: &str, r: &[f64]| ImageCounts {
            image_id: id.into(),
            slots: (0..n).map(|_| r.iter().map(|v| (v * slot) as u64).collect()).collect(),
        };
        let counts = [mk("a", &[20.0, 8.0]), mk("b", &[12.0, 16.0])];
        let rates = [img("a", &[20.0, 8.0]), img("b", &[12.0, 16.0])];
        let pairs = all_ordered_pairs(&rates);
        let from_rates = compute_indices(&rates, &pairs, 6, slot).unwrap();
        let from_counts = compute_indices_from_counts(&counts, &pairs, 6, slot).unwrap();
        for (a, b) in from_rates.iter().zip(&from_counts) {
            assert_abs_diff_eq!(a.d_tilde, b.d_tilde, epsilon = 0.02 * a.d_tilde);
            assert_abs_diff_eq!(a.kl, b.kl, epsilon = 0.02 * a.kl);
            assert_abs_diff_eq!(a.chernoff, b.chernoff, epsilon = 1e-9);
            assert_abs_diff_eq!(a.l1, b.l1, epsilon = 1e-12);
        }
    }
}
