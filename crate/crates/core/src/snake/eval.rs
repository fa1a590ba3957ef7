use serde::{Deserialize, Serialize};

use super::env::{SnakeEnvConfig, SnakeSim, StartPose, StepOutcome};
use super::mdp::{SnakeAction, SnakeObservation};
use super::world::PegWorld;
use crate::error::Result;
use crate::shape::{admittance_step, AdmittanceConfig, MAX_WINDOWS};

/// Anything that can drive the shape parameters of a running trial.
pub trait SnakeController {
    fn step(&mut self, sim: &mut SnakeSim) -> Result<StepOutcome>;
}

/// The decentralized compliant controller with fixed gains.
impl SnakeController for AdmittanceConfig {
    fn step(&mut self, sim: &mut SnakeSim) -> Result<StepOutcome> {
        Ok(sim.step_compliant(self)?.0)
    }
}

/// Adapter for per-window discrete policies.
pub struct PolicyController<F>(pub F);

impl<F> SnakeController for PolicyController<F>
where
    F: FnMut(usize, &SnakeObservation) -> SnakeAction,
{
    fn step(&mut self, sim: &mut SnakeSim) -> Result<StepOutcome> {
        let obs = sim.observations();
        let actions: [SnakeAction; MAX_WINDOWS] = std::array::from_fn(|j| (self.0)(j, &obs[j]));
        sim.step_actions(&actions)
    }
}

/// Applies, per window, the grid action nearest to the shape change the
/// compliant controller would make from the current state.
pub struct CompliantMimic(pub AdmittanceConfig);

impl SnakeController for CompliantMimic {
    fn step(&mut self, sim: &mut SnakeSim) -> Result<StepOutcome> {
        let dt = sim.cfg.dt();
        let mut actions = [SnakeAction::IDLE; MAX_WINDOWS];
        for (j, action) in actions.iter_mut().enumerate().take(sim.layout.window_count()) {
            let force = sim
                .layout
                .window_force(&sim.cfg.serpenoid, j, &sim.body.external_torques);
            let before = sim.layout.windows[j].state;
            let after = admittance_step(&self.0, &sim.cfg.bounds, &before, force, dt)?;
            *action = SnakeAction::quantize(
                [
                    (after.params.amplitude - before.params.amplitude) / dt,
                    (after.params.spatial_freq - before.params.spatial_freq) / dt,
                ],
                sim.cfg.delta(),
            );
        }
        sim.step_actions(&actions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitTrial {
    /// `None` marks a trial that made no measurable progress.
    pub cycles_per_meter: Option<f64>,
    pub progress: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitEvaluation {
    pub trials: Vec<GaitTrial>,
    pub mean: f64,
    /// Unbiased sample variance over the scored trials.
    pub variance: f64,
    pub excluded: usize,
}

/// Progress below this counts as a timeout.
const MIN_PROGRESS: f64 = 0.01;

impl GaitEvaluation {
    pub fn from_trials(trials: Vec<GaitTrial>) -> Self {
        let scored: Vec<f64> = trials.iter().filter_map(|t| t.cycles_per_meter).collect();
        let n = scored.len() as f64;
        let mean = if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().sum::<f64>() / n
        };
        let variance = if scored.len() < 2 {
            0.0
        } else {
            scored.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        };
        Self {
            excluded: trials.len() - scored.len(),
            trials,
            mean,
            variance,
        }
    }
}

/// Gait periods per meter of centroid progression: `(elapsed/T_s)/meters`.
pub fn cycles_per_meter(elapsed: f64, period: f64, progress: f64) -> Option<f64> {
    (progress >= MIN_PROGRESS).then(|| (elapsed / period) / progress)
}

/// Runs one controller on every `(world, start)` case for `duration`
/// seconds.
pub fn evaluate_gait_cycles<C: SnakeController>(
    cfg: &SnakeEnvConfig,
    controller: &mut dyn FnMut() -> C,
    cases: &[(PegWorld, StartPose)],
    duration: f64,
) -> Result<GaitEvaluation> {
    let steps = (duration / cfg.dt()).round() as usize;
    let mut trials = Vec::with_capacity(cases.len());
    for (world, start) in cases {
        let mut sim = SnakeSim::new(*cfg, world.clone(), *start);
        let mut c = controller();
        for _ in 0..steps {
            c.step(&mut sim)?;
        }
        let progress = sim.progress();
        trials.push(GaitTrial {
            cycles_per_meter: cycles_per_meter(sim.elapsed(), cfg.serpenoid.period(), progress),
            progress,
            elapsed: sim.elapsed(),
        });
    }
    Ok(GaitEvaluation::from_trials(trials))
}

/// Evaluates two controllers on identical worlds and start poses.
pub fn evaluate_paired<A: SnakeController, B: SnakeController>(
    cfg: &SnakeEnvConfig,
    first: &mut dyn FnMut() -> A,
    second: &mut dyn FnMut() -> B,
    cases: &[(PegWorld, StartPose)],
    duration: f64,
) -> Result<(GaitEvaluation, GaitEvaluation)> {
    Ok((
        evaluate_gait_cycles(cfg, first, cases, duration)?,
        evaluate_gait_cycles(cfg, second, cases, duration)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_meter_per_period_is_one_cycle() {
        assert_eq!(cycles_per_meter(3.5, 3.5, 1.0), Some(1.0));
        assert_eq!(cycles_per_meter(7.0, 3.5, 1.0), Some(2.0));
        assert_eq!(cycles_per_meter(7.0, 3.5, 0.0), None);
    }

    #[test]
    fn statistics_skip_timeouts() {
        let t = |c| GaitTrial {
            cycles_per_meter: c,
            progress: 1.0,
            elapsed: 1.0,
        };
        let e = GaitEvaluation::from_trials(vec![t(Some(2.0)), t(None), t(Some(4.0))]);
        assert_eq!(e.excluded, 1);
        assert_eq!(e.mean, 3.0);
        assert_eq!(e.variance, 2.0);
    }
}
