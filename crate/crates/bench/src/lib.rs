//! Fixtures shared by the benchmarks.

use artibot::hexapod::{reset_episode, HexapodConfig, HexapodState, ALL_LEGS};
use artibot::neural::{Architecture, FeedforwardSpec, RecurrentSpec, Weights};
use artibot::snake::{generate_world, SnakeEnvConfig, SnakeSim, StartPose, WorldConfig};

pub fn snake_sim(seed: u64) -> SnakeSim {
    let cfg = SnakeEnvConfig::default();
    let world = generate_world(seed, &WorldConfig::default()).expect("default world is feasible");
    SnakeSim::new(cfg, world, StartPose::sample(seed, cfg.max_heading))
}

pub fn hexapod_state(seed: u64) -> (HexapodConfig, HexapodState) {
    let cfg = HexapodConfig::default();
    let s = reset_episode(&cfg, seed, 0, ALL_LEGS).expect("reset succeeds");
    (cfg, s)
}

pub fn snake_weights() -> Weights {
    Weights::init(Architecture::Feedforward(FeedforwardSpec::snake()), 1).expect("valid spec")
}

pub fn leg_weights() -> Weights {
    Weights::init(Architecture::Recurrent(RecurrentSpec::leg()), 1).expect("valid spec")
}
