use artibot_bench::{hexapod_state, leg_weights, snake_sim, snake_weights};

#[test]
fn fixtures_are_valid() {
    let sim = snake_sim(1);
    assert!(sim.body.num_joints() > 0);
    let (_, s) = hexapod_state(2);
    assert!(s.grounded_count() >= 3);
    assert!(snake_weights().params.iter().all(|v| v.is_finite()));
    assert!(leg_weights().params.iter().all(|v| v.is_finite()));
}
