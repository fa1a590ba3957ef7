use artibot::a3c::{decode_joint_action, encode_joint_action, ReplayPool, CENTRALIZED_ACTIONS};
use artibot::cpg::{superellipse, superellipse_gradient};
use artibot::harness::{derive_seed, RunConfig};
use artibot::neural::{
    discounted_returns, ops::entropy, ops::softmax, AdamState, Architecture, Checkpoint, FeedforwardSpec,
    Weights,
};
use artibot::shape::{serpenoid_angles, shape_jacobian, SerpenoidConfig, ShapeParams};
use artibot::snake::{Experience, ReplayDatabase, ReplayHeader, SnakeAction, SnakeObservation};
use proptest::prelude::*;

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn experience() -> impl Strategy<Value = Experience> {
    (
        any::<u32>(),
        0u8..6,
        any::<u32>(),
        prop::array::uniform7(finite(-10.0, 10.0)),
        0usize..SnakeAction::COUNT,
        finite(-5.0, 5.0),
    )
        .prop_map(|(trial_id, window_id, step_index, obs, a, reward)| Experience {
            trial_id,
            window_id,
            step_index,
            observation: SnakeObservation::from_array(obs),
            action: SnakeAction::new(a).unwrap(),
            reward,
        })
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(finite(-50.0, 50.0), 1..30)) {
        let p = softmax(&logits);
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let h = entropy(&p);
        prop_assert!(h >= -1e-12 && h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn returns_satisfy_recursion(
        rewards in prop::collection::vec(finite(-3.0, 3.0), 0..40),
        bootstrap in finite(-5.0, 5.0),
        gamma in finite(0.0, 0.999),
    ) {
        let r = discounted_returns(&rewards, bootstrap, gamma);
        prop_assert_eq!(r.len(), rewards.len());
        for t in 0..rewards.len() {
            let next = if t + 1 < rewards.len() { r[t + 1] } else { bootstrap };
            prop_assert!((r[t] - (rewards[t] + gamma * next)).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_keeps_most_recent(cap in 1usize..10, items in prop::collection::vec(any::<u16>(), 0..40)) {
        let mut pool = ReplayPool::new(cap);
        for &x in &items {
            pool.push(x);
        }
        let kept: Vec<u16> = pool.iter().copied().collect();
        let start = items.len().saturating_sub(cap);
        prop_assert_eq!(kept, items[start..].to_vec());
    }

    #[test]
    fn joint_action_round_trip(index in 0usize..CENTRALIZED_ACTIONS) {
        let legs = decode_joint_action(index).unwrap();
        prop_assert_eq!(encode_joint_action(&legs), index);
    }

    #[test]
    fn superellipse_is_one_on_its_curve(
        a in finite(0.2, 3.0),
        b in finite(0.2, 3.0),
        n in finite(1.5, 8.0),
        th in finite(0.0, std::f64::consts::TAU),
        scale in finite(0.1, 3.0),
    ) {
        let (c, s) = (th.cos(), th.sin());
        // Point on the curve along direction th: solve (|x|/a)^n + (|y|/b)^n = 1.
        let unit = superellipse(a, b, n, [0.0; 2], [c, s]);
        let r = unit.powf(-1.0 / n);
        let on = [r * c, r * s];
        prop_assert!((superellipse(a, b, n, [0.0; 2], on) - 1.0).abs() < 1e-9);
        // Homogeneous of degree n in the offset from the center.
        let scaled = superellipse(a, b, n, [0.0; 2], [scale * on[0], scale * on[1]]);
        prop_assert!((scaled - scale.powf(n)).abs() < 1e-8 * scale.powf(n).max(1.0));
        let g = superellipse_gradient(a, b, n, [0.0; 2], on);
        // Euler's theorem: x·∇H = n·H.
        prop_assert!((g[0] * on[0] + g[1] * on[1] - n).abs() < 1e-8);
    }

    #[test]
    fn jacobian_is_linear_in_amplitude(
        amp in finite(0.0, 1.5),
        freq in finite(0.5, 20.0),
        t in finite(0.0, 10.0),
    ) {
        let cfg = SerpenoidConfig::default();
        let p = ShapeParams { amplitude: amp, spatial_freq: freq };
        let jac = shape_jacobian(&cfg, p, t);
        let angles = serpenoid_angles(&cfg, amp, freq, t);
        for i in 0..cfg.num_joints {
            // θ − θ₀ = A·∂θ/∂A exactly.
            prop_assert!((angles[i] - cfg.theta0 - amp * jac[(0, i)]).abs() < 1e-12);
        }
    }

    #[test]
    fn seeds_are_stable_and_purpose_specific(root in any::<u64>(), a in "[a-z]{1,8}", b in "[a-z]{1,8}") {
        prop_assert_eq!(derive_seed(root, &a), derive_seed(root, &a));
        if a != b {
            prop_assert_ne!(derive_seed(root, &a), derive_seed(root, &b));
        }
    }

    #[test]
    fn replay_db_round_trip(records in prop::collection::vec(experience(), 0..50)) {
        let mut db = ReplayDatabase::new(ReplayHeader {
            num_joints: 10,
            dt: 0.02,
            delta_amplitude: 0.01,
            delta_spatial_freq: 0.05,
            lambda_r: 0.5,
        });
        db.records = records;
        let back = ReplayDatabase::from_bytes(&db.to_bytes()).unwrap();
        prop_assert_eq!(back, db);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(seed in any::<u64>(), flip in 0usize..64) {
        let weights = Weights::init(Architecture::Feedforward(FeedforwardSpec::snake()), seed).unwrap();
        let ckpt = Checkpoint { adam: AdamState::new(weights.params.len()), weights };
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert!(back.weights.params.iter().zip(&ckpt.weights.params).all(|(x, y)| x.to_bits() == y.to_bits()));
        // Any single-bit flip in the payload is caught.
        let mut bad = bytes.clone();
        let pos = bytes.len() / 2 + flip;
        bad[pos] ^= 1;
        prop_assert!(Checkpoint::from_bytes(&bad).is_err());
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), workers in 1usize..=6, deterministic in any::<bool>()) {
        let cfg = RunConfig { seed, workers, deterministic, ..RunConfig::default() };
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.fingerprint(), cfg.fingerprint());
        prop_assert_eq!(back.seed, seed);
    }
}
