use super::ops::entropy;

/// Probability floor used inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// `R_t = r_t + γ R_{t+1}`, seeded with `bootstrap` after the last step.
pub fn discounted_returns(rewards: &[f64], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Actor objective `f_π = log π(a)·A + κ·H(π)` for one step, with its
/// gradient with respect to the softmax logits for descent on `−f_π`.
pub fn policy_loss(policy: &[f64], action: usize, advantage: f64, kappa: f64) -> (f64, Vec<f64>) {
    let h = entropy(policy);
    let objective = policy[action].max(PROB_FLOOR).ln() * advantage + kappa * h;
    let grad = policy
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let onehot = if k == action { 1.0 } else { 0.0 };
            let dlog = onehot - p;
            let dent = if p > 0.0 { -p * (p.ln() + h) } else { 0.0 };
            -(advantage * dlog + kappa * dent)
        })
        .collect();
    (objective, grad)
}

/// Sum of squared errors `Σ (R_t − V_t)²`.
pub fn value_loss(returns: &[f64], values: &[f64]) -> f64 {
    returns
        .iter()
        .zip(values)
        .map(|(r, v)| (r - v) * (r - v))
        .sum()
}

/// Binary cross-entropy of a sigmoid unit given its logit, and the logit
/// gradient `σ(z) − y`.
pub fn bce_with_logit(z: f64, label: f64) -> (f64, f64) {
    let loss = z.max(0.0) - z * label + (-z.abs()).exp().ln_1p();
    (loss, super::ops::sigmoid(z) - label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::ops::softmax;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn returns_by_hand() {
        let r = discounted_returns(&[1.0, 1.0], 0.0, 0.995);
        assert!((r[0] - 1.995).abs() < 1e-15 && r[1] == 1.0);
        assert_eq!(discounted_returns(&[0.3, -2.0], 5.0, 0.0), vec![0.3, -2.0]);
        let g: f64 = 0.9;
        let r = discounted_returns(&[0.0; 4], 2.0, g);
        for (t, v) in r.iter().enumerate() {
            assert!((v - g.powi(4 - t as i32) * 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_policy_zero_advantage_has_zero_gradient() {
        let p = vec![1.0 / 9.0; 9];
        let (_, g) = policy_loss(&p, 3, 0.0, 0.01);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn hand_policy_value() {
        let (f, _) = policy_loss(&[0.5, 0.5], 0, 2.0, 0.0);
        assert!((f - 0.5f64.ln() * 2.0).abs() < 1e-15);
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let z: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = rng.random_range(0..5);
            let adv = rng.random_range(-3.0..3.0);
            let (_, g) = policy_loss(&softmax(&z), a, adv, 0.05);
            for k in 0..5 {
                let mut hi = z.clone();
                let mut lo = z.clone();
                hi[k] += 1e-6;
                lo[k] -= 1e-6;
                let fd = -(policy_loss(&softmax(&hi), a, adv, 0.05).0
                    - policy_loss(&softmax(&lo), a, adv, 0.05).0)
                    / 2e-6;
                assert!((fd - g[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn value_loss_cases() {
        assert_eq!(value_loss(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(value_loss(&[1.0], &[0.0]), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        let v: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        let mut oracle = 0.0;
        for i in 0..30 {
            oracle += (r[i] - v[i]).powi(2);
        }
        assert!((value_loss(&r, &v) - oracle).abs() < 1e-12);
    }

    #[test]
    fn bce_matches_direct_formula() {
        for &(z, y) in &[(0.3, 1.0), (-2.0, 0.0), (5.0, 0.0), (-40.0, 1.0)] {
            let p = crate::neural::ops::sigmoid(z);
            let direct: f64 = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            let (l, g) = bce_with_logit(z, y);
            assert!((l - direct).abs() < 1e-9 * (1.0 + direct.abs()));
            assert!((g - (p - y)).abs() < 1e-15);
        }
    }
}
