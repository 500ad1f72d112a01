//! Goodness of fit of the Poisson count sampler.

use asht_core::poisson::poisson_draw;
use asht_core::special::ln_gamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 99th percentile of χ² with 10 degrees of freedom.
const CHI2_10_Q99: f64 = 23.209251158954356;

fn pmf(k: u64, mu: f64) -> f64 {
    (k as f64 * mu.ln() - mu - ln_gamma(k as f64 + 1.0)).exp()
}

#[test]
fn chi_square_fit_at_mean_two_and_a_half() {
    let mu = 2.5;
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // bins 0..=9 and a tail bin for 10 and above
    let mut observed = [0u64; 11];
    for _ in 0..draws {
        let k = poisson_draw(mu, &mut rng).min(10) as usize;
        observed[k] += 1;
    }
    let mut expected: Vec<f64> = (0..10).map(|k| pmf(k, mu) * draws as f64).collect();
    expected.push(draws as f64 - expected.iter().sum::<f64>());
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    assert!(chi2 < CHI2_10_Q99, "χ² = {chi2}");
}

#[test]
fn large_means_keep_mean_and_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mu in [0.5, 30.0, 500.0] {
        let n = 50_000;
        let x: Vec<f64> = (0..n).map(|_| poisson_draw(mu, &mut rng) as f64).collect();
        let m = x.iter().sum::<f64>() / n as f64;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (mu / n as f64).sqrt();
        assert!((m - mu).abs() <= 4.0 * se, "μ={mu}: mean {m}");
        assert!((v / mu - 1.0).abs() <= 0.05, "μ={mu}: variance {v}");
    }
}
