use rand::Rng;

use crate::error::{contract, Result};

/// Samples from `softmax(log π / T)`; `T = 1` samples from `π` itself.
pub fn boltzmann_select<R: Rng + ?Sized>(policy: &[f64], temperature: f64, rng: &mut R) -> Result<usize> {
    if !(temperature > 0.0) || policy.is_empty() {
        return Err(contract("boltzmann selection needs T > 0 and a non-empty policy"));
    }
    let logs: Vec<f64> = policy
        .iter()
        .map(|&p| if p > 0.0 { p.ln() / temperature } else { f64::NEG_INFINITY })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return Ok(k);
        }
        u -= w;
    }
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
}

/// Index of the largest probability (first one on ties).
pub fn argmax(policy: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in policy.iter().enumerate() {
        if p > policy[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = [0.8, 0.1, 0.1];
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[boltzmann_select(&p, 1.0, &mut rng).unwrap()] += 1;
        }
        for k in 0..3 {
            assert!((counts[k] as f64 / n as f64 - p[k]).abs() < 0.01);
        }
    }

    #[test]
    fn cold_temperature_is_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(boltzmann_select(&[0.3, 0.4, 0.3], 1e-3, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn uniform_stays_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[boltzmann_select(&[0.25; 4], 0.2, &mut rng).unwrap()] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 / 40_000.0 - 0.25).abs() < 0.01));
        assert!(boltzmann_select(&[0.5, 0.5], 0.0, &mut rng).is_err());
    }
}
