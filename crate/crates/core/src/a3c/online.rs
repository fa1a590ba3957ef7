use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pool::ReplayPool;
use super::report::{EpisodeRecord, ReportLine, TrainingReport, UpdateRecord};
use super::store::{GlobalStore, GradientBatch};
use crate::cpg::LEGS;
use crate::error::{contract, Error, Result};
use crate::hexapod::{
    is_stabilized, reset_episode, step_hexapod, GaitMode, HexapodConfig, HexapodState, LegAction, ALL_LEGS,
};
use crate::neural::{
    boltzmann_select, discounted_returns, Architecture, LossWeights, LstmState, RecurrentNet, RecurrentSpec,
    SequenceTargets,
};

pub const CENTRALIZED_ACTIONS: usize = 729;

/// Joint action of the centralized agent: digit `i` of `index` in base 3
/// drives leg `i` with `0 → Lower`, `1 → Hold`, `2 → Raise`.
pub fn decode_joint_action(index: usize) -> Result<[LegAction; LEGS]> {
    if index >= CENTRALIZED_ACTIONS {
        return Err(contract(format!("joint action {index} out of range")));
    }
    let mut out = [LegAction::Hold; LEGS];
    let mut rest = index;
    for a in out.iter_mut() {
        *a = LegAction::from_index(rest % 3)?;
        rest /= 3;
    }
    Ok(out)
}

pub fn encode_joint_action(actions: &[LegAction; LEGS]) -> usize {
    actions.iter().rev().fold(0, |acc, a| acc * 3 + a.index())
}

/// Stop once the policy is nearly deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothStop {
    pub threshold: f64,
    pub window: usize,
}

impl Default for SmoothStop {
    fn default() -> Self {
        Self {
            threshold: 0.95,
            window: 20,
        }
    }
}

impl SmoothStop {
    /// True when the mean of the last `window` values exceeds the threshold.
    pub fn should_stop(&self, max_probs: &[f64]) -> bool {
        if self.window == 0 || max_probs.len() < self.window {
            return false;
        }
        let tail = &max_probs[max_probs.len() - self.window..];
        tail.iter().sum::<f64>() / self.window as f64 > self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HexapodTrainConfig {
    pub episodes: u64,
    pub slice_len: usize,
    pub pool_capacity: usize,
    /// Gradient pushes per agent after each episode.
    pub updates_per_episode: usize,
    pub gamma: f64,
    pub lr: f64,
    pub temperature: f64,
    pub loss: LossWeights,
    pub smooth_stop: Option<SmoothStop>,
    /// Set by the runner, not by configuration files.
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip)]
    pub deterministic: bool,
}

impl Default for HexapodTrainConfig {
    fn default() -> Self {
        Self {
            episodes: 500,
            slice_len: 32,
            pool_capacity: 6,
            updates_per_episode: 2,
            gamma: 0.95,
            lr: 1e-4,
            temperature: 1.0,
            // Per-step rewards are of order r₀ = −0.02, so the entropy
            // bonus is scaled down to match the advantages.
            loss: LossWeights {
                entropy: 1e-3,
                ..LossWeights::default()
            },
            smooth_stop: None,
            seed: 0,
            deterministic: false,
        }
    }
}

/// One environment transition, handed to the observer before training.
pub struct StepEvent<'a> {
    pub before: &'a HexapodState,
    pub actions: &'a [LegAction; LEGS],
    pub rewards: &'a [f64; LEGS],
    pub after: &'a HexapodState,
}

/// Everything one agent saw during one episode.
#[derive(Debug, Clone, Default)]
pub struct AgentEpisode {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub aux_labels: Vec<Vec<f64>>,
    /// Recurrent state before each step, as produced during the rollout.
    pub states: Vec<LstmState>,
    /// Observation and state after the last step, for bootstrapping.
    pub last: Option<(Vec<f64>, LstmState)>,
    /// The episode ended on stabilization, so nothing follows it.
    pub terminal: bool,
}

impl AgentEpisode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Control {
    /// One agent per leg sharing the network.
    Distributed,
    /// One agent commanding all legs.
    Centralized,
}

impl Control {
    fn agents(self) -> usize {
        match self {
            Control::Distributed => LEGS,
            Control::Centralized => 1,
        }
    }

    fn observation(self, s: &HexapodState, agent: usize) -> Vec<f64> {
        match self {
            Control::Distributed => s.observation(agent).0.to_vec(),
            Control::Centralized => s.observations().iter().flat_map(|o| o.0).collect(),
        }
    }

    fn aux_label(self, s: &HexapodState, agent: usize) -> Vec<f64> {
        let above = (s.height_error > 0.0) as u8 as f64;
        let ground = match self {
            Control::Distributed => s.contacts[agent],
            Control::Centralized => s.live_legs().all(|i| s.contacts[i]),
        };
        vec![above, ground as u8 as f64]
    }

    fn reward(self, s: &HexapodState, rewards: &[f64; LEGS], agent: usize) -> f64 {
        match self {
            Control::Distributed => rewards[agent],
            Control::Centralized => {
                let live: Vec<f64> = s.live_legs().map(|i| rewards[i]).collect();
                live.iter().sum::<f64>() / live.len() as f64
            }
        }
    }
}

fn recurrent_spec(store: &GlobalStore, control: Control) -> Result<RecurrentSpec> {
    let Architecture::Recurrent(spec) = store.weights_arch() else {
        return Err(Error::Config("hexapod training needs a recurrent network".into()));
    };
    let want = match control {
        Control::Distributed => (7, LegAction::COUNT),
        Control::Centralized => (7 * LEGS, CENTRALIZED_ACTIONS),
    };
    if (spec.inputs, spec.actions) != want || spec.aux != 2 {
        return Err(Error::Config(format!(
            "network shape {}→{} does not fit this controller",
            spec.inputs, spec.actions
        )));
    }
    Ok(spec)
}

struct Rollout {
    agents: Vec<AgentEpisode>,
    record: EpisodeRecord,
}

fn rollout(
    cfg: &HexapodConfig,
    tcfg: &HexapodTrainConfig,
    net: &RecurrentNet,
    params: &[f64],
    control: Control,
    episode: u64,
    rng: &mut ChaCha8Rng,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<Rollout> {
    let n = control.agents();
    let mut agents = vec![AgentEpisode::default(); n];
    let mut record = EpisodeRecord {
        episode,
        reward: 0.0,
        steps: 0,
        stabilized: false,
        fault: false,
        mean_max_prob: 0.0,
    };
    let mut state = match reset_episode(cfg, tcfg.seed, episode, ALL_LEGS) {
        Ok(s) => s,
        Err(Error::EnvironmentFault(_)) => {
            record.fault = true;
            return Ok(Rollout { agents, record });
        }
        Err(e) => return Err(e),
    };
    let mut lstm: Vec<LstmState> = (0..n).map(|_| net.initial_state()).collect();
    let mut max_prob_sum = 0.0;
    while record.steps < cfg.max_steps {
        if is_stabilized(&state, cfg.pose_tol, cfg.height_tol) {
            record.stabilized = true;
            break;
        }
        let mut choices = vec![0usize; n];
        let mut next_lstm = Vec::with_capacity(n);
        for a in 0..n {
            let obs = control.observation(&state, a);
            let out = net.step(params, &obs, &lstm[a])?;
            max_prob_sum += out.policy.iter().copied().fold(0.0, f64::max) / n as f64;
            choices[a] = boltzmann_select(&out.policy, tcfg.temperature, rng)?;
            let ep = &mut agents[a];
            ep.observations.push(obs);
            ep.aux_labels.push(control.aux_label(&state, a));
            ep.states.push(lstm[a].clone());
            ep.actions.push(choices[a]);
            next_lstm.push(out.state);
        }
        lstm = next_lstm;
        let actions: [LegAction; LEGS] = match control {
            Control::Distributed => {
                let mut acts = [LegAction::Hold; LEGS];
                for (i, &c) in choices.iter().enumerate() {
                    acts[i] = LegAction::from_index(c)?;
                }
                acts
            }
            Control::Centralized => decode_joint_action(choices[0])?,
        };
        let (next, rewards) = match step_hexapod(cfg, &state, &actions, cfg.train_action, GaitMode::Standing) {
            Ok(v) => v,
            Err(Error::EnvironmentFault(_)) => {
                // The aborted step has no outcome; keep what came before it.
                for ep in agents.iter_mut() {
                    ep.observations.pop();
                    ep.aux_labels.pop();
                    ep.states.pop();
                    ep.actions.pop();
                }
                record.fault = true;
                break;
            }
            Err(e) => return Err(e),
        };
        observer(&StepEvent {
            before: &state,
            actions: &actions,
            rewards: &rewards,
            after: &next,
        });
        let live = next.live_legs().count() as f64;
        record.reward += next.live_legs().map(|i| rewards[i]).sum::<f64>() / live;
        for (a, ep) in agents.iter_mut().enumerate() {
            ep.rewards.push(control.reward(&next, &rewards, a));
        }
        record.steps += 1;
        state = next;
    }
    if !record.stabilized && !record.fault && is_stabilized(&state, cfg.pose_tol, cfg.height_tol) {
        record.stabilized = true;
    }
    for (a, ep) in agents.iter_mut().enumerate() {
        ep.terminal = record.stabilized;
        if !record.fault {
            ep.last = Some((control.observation(&state, a), lstm[a].clone()));
        }
    }
    if record.steps > 0 {
        record.mean_max_prob = max_prob_sum / record.steps as f64;
    }
    Ok(Rollout { agents, record })
}

/// Trains on one slice of one pooled episode and pushes the gradient.
#[allow(clippy::too_many_arguments)]
fn train_slice(
    net: &RecurrentNet,
    store: &GlobalStore,
    tcfg: &HexapodTrainConfig,
    pool: &ReplayPool<AgentEpisode>,
    agent: usize,
    episode: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<UpdateRecord>> {
    let Some(ep) = pool.sample(rng) else {
        return Ok(None);
    };
    if ep.is_empty() {
        return Ok(None);
    }
    let len = tcfg.slice_len.min(ep.len());
    let start = rng.random_range(0..=ep.len() - len);
    let end = start + len;
    let snap = store.pull();
    let init = &ep.states[start];
    let obs = &ep.observations[start..end];
    let outs = net.run(&snap.params, obs, init)?;
    let bootstrap = if end < ep.len() {
        let carried = &outs.last().expect("non-empty slice").state;
        net.step(&snap.params, &ep.observations[end], carried)?.value
    } else if ep.terminal {
        0.0
    } else if let Some((o, _)) = &ep.last {
        let carried = &outs.last().expect("non-empty slice").state;
        net.step(&snap.params, o, carried)?.value
    } else {
        0.0
    };
    let rewards = &ep.rewards[start..end];
    let returns = discounted_returns(rewards, bootstrap, tcfg.gamma);
    let advantages: Vec<f64> = returns.iter().zip(&outs).map(|(r, o)| r - o.value).collect();
    let targets = SequenceTargets {
        actions: &ep.actions[start..end],
        returns: &returns,
        advantages: &advantages,
        aux_labels: &ep.aux_labels[start..end],
    };
    let mut grads = vec![0.0; net.layout().total];
    let stats = net.loss_and_gradient(&snap.params, obs, init, &targets, tcfg.loss, &mut grads)?;
    let receipt = store.push(&GradientBatch {
        grads,
        source_version: snap.version,
        steps: len,
    })?;
    Ok(Some(UpdateRecord {
        episode,
        worker: agent,
        loss_pi: -stats.policy_objective,
        loss_v: stats.value_loss,
        entropy: stats.mean_entropy(),
        reward_sum: rewards.iter().sum(),
        staleness: receipt.staleness,
        version: receipt.version,
    }))
}

fn train_online(
    cfg: &HexapodConfig,
    store: &GlobalStore,
    tcfg: &HexapodTrainConfig,
    control: Control,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<TrainingReport> {
    cfg.validate()?;
    if tcfg.slice_len == 0 || tcfg.pool_capacity == 0 || !(tcfg.temperature > 0.0) {
        return Err(Error::Config("slice length, pool capacity and temperature must be positive".into()));
    }
    let spec = recurrent_spec(store, control)?;
    let net = RecurrentNet::new(&spec);
    let n = control.agents();
    // Centralized control gets as many gradient samples per episode as the
    // six leg agents together.
    let updates = match control {
        Control::Distributed => tcfg.updates_per_episode,
        Control::Centralized => tcfg.updates_per_episode * LEGS,
    };
    let mut pools: Vec<ReplayPool<AgentEpisode>> = (0..n).map(|_| ReplayPool::new(tcfg.pool_capacity)).collect();
    let mut act_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    act_rng.set_stream(1000);
    let mut train_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|a| {
            let mut r = ChaCha8Rng::seed_from_u64(tcfg.seed);
            r.set_stream(2000 + a as u64);
            r
        })
        .collect();
    let mut lines = Vec::new();
    let mut max_probs = Vec::new();
    let mut converged_at = None;
    for episode in 0..tcfg.episodes {
        let params = store.pull().params;
        let out = rollout(cfg, tcfg, &net, &params, control, episode, &mut act_rng, observer)?;
        max_probs.push(out.record.mean_max_prob);
        lines.push(ReportLine::Episode(out.record));
        for (pool, ep) in pools.iter_mut().zip(out.agents) {
            pool.push(ep);
        }
        let mut records = Vec::new();
        if tcfg.deterministic || n == 1 {
            for _ in 0..updates {
                for a in 0..n {
                    if let Some(r) = train_slice(&net, store, tcfg, &pools[a], a, episode, &mut train_rngs[a])? {
                        records.push(r);
                    }
                }
            }
        } else {
            let collected = Mutex::new(Vec::new());
            let failure: Mutex<Option<Error>> = Mutex::new(None);
            std::thread::scope(|scope| {
                for (a, rng) in train_rngs.iter_mut().enumerate() {
                    let (net, pools, collected, failure) = (&net, &pools, &collected, &failure);
                    scope.spawn(move || {
                        for _ in 0..updates {
                            match train_slice(net, store, tcfg, &pools[a], a, episode, rng) {
                                Ok(Some(r)) => collected.lock().expect("lock").push(r),
                                Ok(None) => {}
                                Err(e) => {
                                    *failure.lock().expect("lock") = Some(e);
                                    return;
                                }
                            }
                        }
                    });
                }
            });
            if let Some(e) = failure.into_inner().expect("lock") {
                return Err(e);
            }
            records = collected.into_inner().expect("lock");
            records.sort_by_key(|r| r.version);
        }
        lines.extend(records.into_iter().map(ReportLine::Update));
        if let Some(rule) = tcfg.smooth_stop {
            if rule.should_stop(&max_probs) {
                converged_at = Some(episode);
                break;
            }
        }
    }
    Ok(TrainingReport {
        lines,
        attempted_pushes: store.attempted(),
        applied_pushes: store.stats().applied,
        final_version: store.version(),
        converged_at,
    })
}

/// Six leg agents share one recurrent network and learn online from pools
/// of their most recent episodes.
pub fn train_hexapod_online(
    cfg: &HexapodConfig,
    store: &GlobalStore,
    tcfg: &HexapodTrainConfig,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<TrainingReport> {
    train_online(cfg, store, tcfg, Control::Distributed, observer)
}

/// Single agent choosing one of 3⁶ joint actions, rewarded with the mean of
/// the per-leg rewards.
pub fn train_hexapod_centralized(
    cfg: &HexapodConfig,
    store: &GlobalStore,
    tcfg: &HexapodTrainConfig,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<TrainingReport> {
    train_online(cfg, store, tcfg, Control::Centralized, observer)
}

/// Mean of the centralized per-step reward: arithmetic mean over live legs.
pub fn centralized_reward(state: &HexapodState, rewards: &[f64; LEGS]) -> f64 {
    Control::Centralized.reward(state, rewards, 0)
}
