use serde::{Deserialize, Serialize};

use crate::cpg::LEGS;
use crate::error::{contract, Error, Result};
use crate::hexapod::{
    is_stabilized, remove_legs, reset_episode, step_hexapod, GaitMode, HexapodConfig, HexapodState, LegAction,
    ALL_LEGS, MID_LEGS,
};
use crate::neural::{argmax, Architecture, FeedforwardNet, LstmState, RecurrentNet, Weights};
use crate::snake::{PolicyController, SnakeAction, SnakeObservation};

/// Greedy per-window snake policy from a feed-forward checkpoint.
pub fn greedy_snake_controller(
    weights: &Weights,
) -> Result<PolicyController<impl FnMut(usize, &SnakeObservation) -> SnakeAction + '_>> {
    let Architecture::Feedforward(spec) = &weights.arch else {
        return Err(Error::Config("snake evaluation needs a feed-forward checkpoint".into()));
    };
    let net = FeedforwardNet::new(spec);
    Ok(PolicyController(move |_, obs: &SnakeObservation| {
        let out = net
            .forward(&weights.params, &obs.to_array())
            .expect("observations from the simulator are finite");
        SnakeAction::new(argmax(&out.policy)).expect("policy has nine entries")
    }))
}

/// What drives the legs during a hexapod evaluation.
#[derive(Debug, Clone, Copy)]
pub enum HexapodPolicy<'w> {
    /// Shared per-leg recurrent network, greedy.
    Network(&'w Weights),
    /// Offsets never change.
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexapodEpisodeResult {
    pub episode: u64,
    pub stabilized: bool,
    pub steps: usize,
    pub fault: bool,
    /// Mean `|VE|` over the live legs at reset and at the end.
    pub initial_mean_ve: f64,
    pub final_mean_ve: f64,
}

impl HexapodEpisodeResult {
    pub fn ve_decreased(&self) -> bool {
        !self.fault && self.final_mean_ve < self.initial_mean_ve
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexapodEvaluation {
    pub episodes: Vec<HexapodEpisodeResult>,
    pub success_rate: f64,
    /// Mean steps to stabilize over successful episodes.
    pub mean_steps: f64,
    /// Fraction of resets whose mean `|VE|` ended below its start value.
    pub ve_decrease_rate: f64,
}

impl HexapodEvaluation {
    pub fn from_episodes(episodes: Vec<HexapodEpisodeResult>) -> Self {
        let n = episodes.len().max(1) as f64;
        let ok: Vec<&HexapodEpisodeResult> = episodes.iter().filter(|e| e.stabilized).collect();
        let mean_steps = if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|e| e.steps as f64).sum::<f64>() / ok.len() as f64
        };
        Self {
            success_rate: ok.len() as f64 / n,
            mean_steps,
            ve_decrease_rate: episodes.iter().filter(|e| e.ve_decreased()).count() as f64 / n,
            episodes,
        }
    }
}

fn mean_abs_ve(s: &HexapodState) -> f64 {
    let live: Vec<f64> = s.live_legs().map(|i| s.vertical_error[i].abs()).collect();
    live.iter().sum::<f64>() / live.len() as f64
}

fn greedy_leg_actions(
    net: &RecurrentNet,
    params: &[f64],
    state: &HexapodState,
    lstm: &mut [LstmState],
) -> Result<[LegAction; LEGS]> {
    let mut actions = [LegAction::Hold; LEGS];
    for i in state.live_legs() {
        let out = net.step(params, &state.observation(i).0, &lstm[i])?;
        actions[i] = LegAction::from_index(argmax(&out.policy))?;
        lstm[i] = out.state;
    }
    Ok(actions)
}

/// Static stabilization from `resets` seeded starts at the execution action
/// magnitude. With `quadruped`, the middle legs are removed after each reset.
pub fn evaluate_hexapod(
    cfg: &HexapodConfig,
    policy: HexapodPolicy,
    seed: u64,
    resets: u64,
    quadruped: bool,
) -> Result<HexapodEvaluation> {
    let spec = match policy {
        HexapodPolicy::Network(w) => match &w.arch {
            Architecture::Recurrent(s) if s.inputs == 7 => Some(s.clone()),
            _ => return Err(Error::Config("hexapod evaluation needs a per-leg recurrent checkpoint".into())),
        },
        HexapodPolicy::Idle => None,
    };
    let net = spec.as_ref().map(RecurrentNet::new);
    let mut out = Vec::with_capacity(resets as usize);
    for episode in 0..resets {
        let start = reset_episode(cfg, seed, episode, ALL_LEGS).and_then(|s| {
            if quadruped {
                remove_legs(cfg, &s, &MID_LEGS)
            } else {
                Ok(s)
            }
        });
        let mut state = match start {
            Ok(s) => s,
            Err(Error::EnvironmentFault(_)) => {
                out.push(HexapodEpisodeResult {
                    episode,
                    stabilized: false,
                    steps: 0,
                    fault: true,
                    initial_mean_ve: f64::NAN,
                    final_mean_ve: f64::NAN,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let initial = mean_abs_ve(&state);
        let mut lstm: Vec<LstmState> = match &net {
            Some(n) => (0..LEGS).map(|_| n.initial_state()).collect(),
            None => Vec::new(),
        };
        let mut steps = 0;
        let mut fault = false;
        let mut stabilized = is_stabilized(&state, cfg.pose_tol, cfg.height_tol);
        while !stabilized && steps < cfg.max_steps {
            let actions = match (&net, policy) {
                (Some(n), HexapodPolicy::Network(w)) => greedy_leg_actions(n, &w.params, &state, &mut lstm)?,
                _ => [LegAction::Hold; LEGS],
            };
            match step_hexapod(cfg, &state, &actions, cfg.exec_action, GaitMode::Standing) {
                Ok((next, _)) => state = next,
                Err(Error::EnvironmentFault(_)) => {
                    fault = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            steps += 1;
            stabilized = is_stabilized(&state, cfg.pose_tol, cfg.height_tol);
        }
        out.push(HexapodEpisodeResult {
            episode,
            stabilized,
            steps,
            fault,
            initial_mean_ve: initial,
            final_mean_ve: mean_abs_ve(&state),
        });
    }
    Ok(HexapodEvaluation::from_episodes(out))
}

/// Paired one-sided t statistic of `after − before` and its p-value under
/// `H₀: mean difference ≤ 0`.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Result<(f64, f64)> {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if before.len() != after.len() || before.len() < 2 {
        return Err(contract("paired test needs two equal samples of size ≥ 2"));
    }
    let d: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if mean > 0.0 { (f64::INFINITY, 0.0) } else { (f64::NEG_INFINITY, 1.0) });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| contract(e.to_string()))?;
    Ok((t, 1.0 - dist.cdf(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_test_values() {
        let (t, p) = paired_t_test(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t - 2.0 / (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(p < 0.05);
        let (_, p) = paired_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn idle_policy_runs() {
        let cfg = HexapodConfig::default();
        let e = evaluate_hexapod(&cfg, HexapodPolicy::Idle, 3, 4, false).unwrap();
        assert_eq!(e.episodes.len(), 4);
        for ep in &e.episodes {
            assert!(ep.stabilized || ep.steps == cfg.max_steps || ep.fault);
        }
    }
}
