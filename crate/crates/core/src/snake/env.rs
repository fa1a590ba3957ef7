use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::body::{step_dynamics, DynamicsConfig, Pose2, SnakeBody};
use super::mdp::{apply_actions, observe, shared_reward, Experience, SnakeAction, SnakeObservation};
use super::world::PegWorld;
use crate::error::Result;
use crate::shape::{
    admittance_step, AdmittanceConfig, SerpenoidConfig, ShapeBounds, ShapeParams, WindowLayout,
    MAX_WINDOWS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnakeEnvConfig {
    pub serpenoid: SerpenoidConfig,
    pub dynamics: DynamicsConfig,
    pub nominal: ShapeParams,
    pub bounds: ShapeBounds,
    /// Sigmoid steepness of the activation windows.
    pub steepness: f64,
    pub delta_amplitude: f64,
    pub delta_spatial_freq: f64,
    pub lambda_r: f64,
    /// Initial headings are drawn from `[-max_heading, max_heading]`.
    pub max_heading: f64,
    /// Distance from the field's start edge to the head joint.
    pub start_offset: f64,
}

impl Default for SnakeEnvConfig {
    fn default() -> Self {
        Self {
            serpenoid: SerpenoidConfig::default(),
            dynamics: DynamicsConfig::default(),
            nominal: ShapeParams::nominal(),
            bounds: ShapeBounds::default(),
            steepness: 100.0,
            delta_amplitude: 0.005,
            delta_spatial_freq: 0.012,
            lambda_r: 100.0,
            max_heading: PI / 6.0,
            start_offset: 1.4,
        }
    }
}

impl SnakeEnvConfig {
    pub fn delta(&self) -> [f64; 2] {
        [self.delta_amplitude, self.delta_spatial_freq]
    }

    pub fn dt(&self) -> f64 {
        self.serpenoid.dt
    }
}

/// Randomized initial configuration of a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPose {
    pub heading: f64,
    pub wave_phase: f64,
}

impl StartPose {
    pub fn sample(seed: u64, max_heading: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a7);
        Self {
            heading: rng.random_range(-max_heading..=max_heading),
            wave_phase: rng.random_range(0.0..2.0 * PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// Centroid displacement over the step.
    pub displacement: [f64; 2],
}

/// A running snake trial: body, windows and the reward reference.
#[derive(Debug, Clone)]
pub struct SnakeSim {
    pub cfg: SnakeEnvConfig,
    pub world: PegWorld,
    pub body: SnakeBody,
    pub layout: WindowLayout,
    pub steps: usize,
    origin: [f64; 2],
    last_centroid: [f64; 2],
}

impl SnakeSim {
    /// Places the snake at the start edge of the field. Pegs overlapping
    /// the initial body are removed from the world.
    pub fn new(cfg: SnakeEnvConfig, mut world: PegWorld, start: StartPose) -> Self {
        let layout = WindowLayout::fresh(
            &cfg.serpenoid,
            cfg.nominal,
            start.wave_phase,
            cfg.steepness,
        );
        let angles = layout.joint_angles(&cfg.serpenoid);
        let center = world.field.center();
        let base = Pose2 {
            x: world.field.min[0] + cfg.start_offset,
            y: center[1],
            heading: start.heading,
        };
        let body = SnakeBody::new(base, angles, cfg.serpenoid.module_length);
        world.clear_around(&body.segments(), cfg.dynamics.body_radius + 0.01);
        let c = body.centroid();
        Self {
            cfg,
            world,
            body,
            layout,
            steps: 0,
            origin: c,
            last_centroid: c,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.steps as f64 * self.cfg.dt()
    }

    pub fn centroid(&self) -> [f64; 2] {
        self.body.centroid()
    }

    /// Distance of the centroid from where the trial started.
    pub fn progress(&self) -> f64 {
        let c = self.centroid();
        (c[0] - self.origin[0]).hypot(c[1] - self.origin[1])
    }

    pub fn observations(&self) -> [SnakeObservation; MAX_WINDOWS] {
        std::array::from_fn(|j| {
            observe(&self.cfg.serpenoid, &self.body, &self.layout, j).expect("slot in range")
        })
    }

    /// Applies one discrete action per window and advances one control step.
    pub fn step_actions(&mut self, actions: &[SnakeAction; MAX_WINDOWS]) -> Result<StepOutcome> {
        self.layout = apply_actions(
            &self.layout,
            actions,
            self.cfg.delta(),
            &self.cfg.bounds,
            self.cfg.dt(),
        )?;
        Ok(self.advance())
    }

    /// Runs the decentralized compliant controller for one step. Returns
    /// the outcome and, per window, the grid action nearest to the shape
    /// change the controller produced.
    pub fn step_compliant(
        &mut self,
        gains: &AdmittanceConfig,
    ) -> Result<(StepOutcome, [SnakeAction; MAX_WINDOWS])> {
        let dt = self.cfg.dt();
        let mut recorded = [SnakeAction::IDLE; MAX_WINDOWS];
        let mut next = self.layout.clone();
        for j in 0..self.layout.window_count() {
            let force = self
                .layout
                .window_force(&self.cfg.serpenoid, j, &self.body.external_torques);
            let before = self.layout.windows[j].state;
            let after = admittance_step(gains, &self.cfg.bounds, &before, force, dt)?;
            let rate = [
                (after.params.amplitude - before.params.amplitude) / dt,
                (after.params.spatial_freq - before.params.spatial_freq) / dt,
            ];
            recorded[j] = SnakeAction::quantize(rate, self.cfg.delta());
            next.set_slot_state(j, after);
        }
        self.layout = next;
        Ok((self.advance(), recorded))
    }

    fn advance(&mut self) -> StepOutcome {
        let dt = self.cfg.dt();
        self.steps += 1;
        let phase = self.layout.wave_phase + self.cfg.serpenoid.omega_t * dt;
        self.layout = self.layout.advance(phase).0;
        let commanded = self.layout.joint_angles(&self.cfg.serpenoid);
        let (body, displacement) =
            step_dynamics(&self.world, &self.body, &commanded, dt, &self.cfg.dynamics);
        self.body = body;
        let now = self.centroid();
        let rel = |p: [f64; 2]| [p[0] - self.origin[0], p[1] - self.origin[1]];
        let reward = shared_reward(rel(now), rel(self.last_centroid), self.cfg.lambda_r);
        self.last_centroid = now;
        StepOutcome {
            reward,
            displacement,
        }
    }
}

/// Rolls out the compliant controller for `duration` seconds and records
/// every window's observation, quantized action and the shared reward.
pub fn run_compliant_trial(
    cfg: &SnakeEnvConfig,
    world: &PegWorld,
    start: StartPose,
    gains: &AdmittanceConfig,
    duration: f64,
    trial_id: u32,
) -> Result<Vec<Experience>> {
    Ok(record_compliant_trial(cfg, world, start, gains, duration, trial_id)?.0)
}

/// Same as [`run_compliant_trial`], also returning the centroid progress.
pub fn record_compliant_trial(
    cfg: &SnakeEnvConfig,
    world: &PegWorld,
    start: StartPose,
    gains: &AdmittanceConfig,
    duration: f64,
    trial_id: u32,
) -> Result<(Vec<Experience>, f64)> {
    let mut sim = SnakeSim::new(*cfg, world.clone(), start);
    let steps = (duration / cfg.dt()).round() as usize;
    let mut out = Vec::with_capacity(steps * MAX_WINDOWS);
    for step in 0..steps {
        let obs = sim.observations();
        let (outcome, actions) = sim.step_compliant(gains)?;
        for (j, (o, a)) in obs.iter().zip(actions).enumerate() {
            out.push(Experience {
                trial_id,
                window_id: j as u8,
                step_index: step as u32,
                observation: *o,
                action: a,
                reward: outcome.reward,
            });
        }
    }
    Ok((out, sim.progress()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snake::world::{generate_world, Field, WorldConfig};

    fn empty_world() -> PegWorld {
        PegWorld::empty(Field {
            min: [0.0, 0.0],
            max: [3.0, 1.5],
        })
    }

    #[test]
    fn tuned_gains_in_empty_world_stay_nominal() {
        let mut cfg = SnakeEnvConfig::default();
        cfg.dynamics.drag_normal = cfg.dynamics.drag_tangential;
        let rows = run_compliant_trial(
            &cfg,
            &empty_world(),
            StartPose::sample(1, cfg.max_heading),
            &AdmittanceConfig::tuned(),
            3.0,
            0,
        )
        .unwrap();
        for r in &rows {
            assert_eq!(r.observation.beta, ShapeParams::nominal());
            assert_eq!(r.action, SnakeAction::IDLE);
            assert!(r.reward.abs() < 1e-4);
        }
    }

    #[test]
    fn frozen_controller_records_idle() {
        let cfg = SnakeEnvConfig::default();
        let world = generate_world(3, &WorldConfig::default()).unwrap();
        let frozen = AdmittanceConfig::new([1e9; 2], [1e9; 2], [1e9; 2]).unwrap();
        let rows =
            run_compliant_trial(&cfg, &world, StartPose::sample(3, 0.5), &frozen, 2.0, 7).unwrap();
        assert!(rows.iter().all(|r| r.action == SnakeAction::IDLE));
        assert!(rows.iter().all(|r| r.trial_id == 7));
    }

    #[test]
    fn row_bookkeeping() {
        let cfg = SnakeEnvConfig::default();
        let world = generate_world(5, &WorldConfig::default()).unwrap();
        let duration = 1.0;
        let rows = run_compliant_trial(
            &cfg,
            &world,
            StartPose::sample(5, cfg.max_heading),
            &AdmittanceConfig::tuned(),
            duration,
            0,
        )
        .unwrap();
        let steps = (duration / cfg.dt()).round() as usize;
        assert_eq!(rows.len(), steps * MAX_WINDOWS);
        assert!(rows.iter().all(|r| r.reward > -1.0 && r.reward < 1.0));
    }

    #[test]
    fn all_idle_actions_keep_layout_shapes() {
        let cfg = SnakeEnvConfig::default();
        let mut sim = SnakeSim::new(cfg, empty_world(), StartPose::sample(0, 0.0));
        let before = sim.layout.clone();
        let after = apply_actions(
            &before,
            &[SnakeAction::IDLE; MAX_WINDOWS],
            cfg.delta(),
            &cfg.bounds,
            cfg.dt(),
        )
        .unwrap();
        for (a, b) in after.windows.iter().zip(&before.windows) {
            assert_eq!(a.state.params, b.state.params);
        }
        sim.step_actions(&[SnakeAction::IDLE; MAX_WINDOWS]).unwrap();
    }

    #[test]
    fn single_increment_and_clamp() {
        let cfg = SnakeEnvConfig::default();
        let layout = WindowLayout::fresh(&cfg.serpenoid, cfg.nominal, 0.0, cfg.steepness);
        let up = [SnakeAction::from_signs(1, 0); MAX_WINDOWS];
        let next = apply_actions(&layout, &up, cfg.delta(), &cfg.bounds, cfg.dt()).unwrap();
        let da = next.windows[0].state.amplitude() - layout.windows[0].state.amplitude();
        assert!((da - 0.005 * PI / 160.0).abs() < 1e-15);
        assert!((da - 9.817_477e-5).abs() < 1e-9);

        let mut l = layout;
        for _ in 0..200_000 {
            l = apply_actions(&l, &up, cfg.delta(), &cfg.bounds, cfg.dt()).unwrap();
        }
        assert_eq!(l.windows[0].state.amplitude(), PI / 2.0);
    }

    #[test]
    fn padded_window_observation() {
        let cfg = SnakeEnvConfig::default();
        let world = generate_world(2, &WorldConfig::default()).unwrap();
        let mut sim = SnakeSim::new(cfg, world, StartPose::sample(2, cfg.max_heading));
        for _ in 0..30 {
            sim.step_compliant(&AdmittanceConfig::tuned()).unwrap();
        }
        let obs = sim.observations();
        let padded = &obs[MAX_WINDOWS - 1];
        assert!(sim.layout.window_count() < MAX_WINDOWS);
        assert_eq!(padded.beta, ShapeParams::nominal());
        assert_eq!(padded.projected_torque, [0.0, 0.0]);
        assert_eq!(padded.beta_nominal, ShapeParams::nominal());
    }

    #[test]
    fn deterministic_rollouts() {
        let cfg = SnakeEnvConfig::default();
        let world = generate_world(11, &WorldConfig::default()).unwrap();
        let start = StartPose::sample(11, cfg.max_heading);
        let a = run_compliant_trial(&cfg, &world, start, &AdmittanceConfig::tuned(), 2.0, 0).unwrap();
        let b = run_compliant_trial(&cfg, &world, start, &AdmittanceConfig::tuned(), 2.0, 0).unwrap();
        assert_eq!(a, b);
    }
}
