use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{ReportLine, TrainingReport, UpdateRecord};
use super::store::{GlobalStore, GradientBatch};
use crate::error::{Error, Result};
use crate::neural::{discounted_returns, Architecture, FeedforwardNet};
use crate::shape::MAX_WINDOWS;
use crate::snake::ReplayDatabase;

/// Read-only replay database indexed by `(trial, window)`.
#[derive(Debug, Clone)]
pub struct OfflineDatabase {
    db: ReplayDatabase,
    /// Record indices of each `(trial, window)` in step order.
    index: BTreeMap<(u32, u8), Vec<usize>>,
}

/// A contiguous slice of one trial as seen by one window.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSlice {
    pub trial_id: u32,
    pub window_id: u8,
    pub start: u32,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Observation right after the slice, if the trial continues.
    pub next_observation: Option<Vec<f64>>,
}

impl OfflineDatabase {
    pub fn new(db: ReplayDatabase) -> Self {
        let mut index: BTreeMap<(u32, u8), Vec<usize>> = BTreeMap::new();
        for (k, r) in db.records.iter().enumerate() {
            index.entry((r.trial_id, r.window_id)).or_default().push(k);
        }
        for rows in index.values_mut() {
            rows.sort_by_key(|&k| db.records[k].step_index);
        }
        Self { db, index }
    }

    pub fn database(&self) -> &ReplayDatabase {
        &self.db
    }

    /// Trials of `window` holding at least `len` steps.
    pub fn eligible_trials(&self, window: u8, len: usize) -> Vec<u32> {
        self.index
            .iter()
            .filter(|((_, w), rows)| *w == window && rows.len() >= len)
            .map(|((t, _), _)| *t)
            .collect()
    }

    /// Uniform trial, then uniform start with `len` steps remaining.
    pub fn sample_episode<R: Rng + ?Sized>(&self, window: u8, len: usize, rng: &mut R) -> Result<EpisodeSlice> {
        let trials = self.eligible_trials(window, len);
        if trials.is_empty() || len == 0 {
            return Err(Error::Sampling(format!(
                "no trial of window {window} has {len} steps"
            )));
        }
        let trial = trials[rng.random_range(0..trials.len())];
        let rows = &self.index[&(trial, window)];
        let start = rng.random_range(0..=rows.len() - len);
        self.slice(trial, window, start, len)
    }

    pub fn slice(&self, trial: u32, window: u8, start: usize, len: usize) -> Result<EpisodeSlice> {
        let rows = self
            .index
            .get(&(trial, window))
            .ok_or_else(|| Error::Sampling(format!("no rows for trial {trial} window {window}")))?;
        if start + len > rows.len() {
            return Err(Error::Sampling("slice runs past the end of the trial".into()));
        }
        let rec = |k: usize| &self.db.records[rows[k]];
        Ok(EpisodeSlice {
            trial_id: trial,
            window_id: window,
            start: rec(start).step_index,
            observations: (start..start + len).map(|k| rec(k).observation.to_array().to_vec()).collect(),
            actions: (start..start + len).map(|k| rec(k).action.index()).collect(),
            rewards: (start..start + len).map(|k| rec(k).reward).collect(),
            next_observation: rows
                .get(start + len)
                .map(|&r| self.db.records[r].observation.to_array().to_vec()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnakeTrainConfig {
    /// Global episode budget shared by all workers.
    pub episodes: u64,
    /// Set by the runner, not by configuration files.
    #[serde(skip)]
    pub workers: usize,
    pub episode_len: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub lr: f64,
    #[serde(skip)]
    pub seed: u64,
    /// Run every worker in one stream, round-robin, for bit-exact reruns.
    #[serde(skip)]
    pub deterministic: bool,
}

impl Default for SnakeTrainConfig {
    fn default() -> Self {
        Self {
            episodes: 50_000,
            workers: MAX_WINDOWS,
            episode_len: 89,
            gamma: 0.995,
            kappa: 0.01,
            lr: 1e-4,
            seed: 0,
            deterministic: false,
        }
    }
}

/// Pulls, replays one slice of its window, and pushes the gradient.
fn snake_update(
    db: &OfflineDatabase,
    store: &GlobalStore,
    cfg: &SnakeTrainConfig,
    worker: usize,
    episode: u64,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateRecord> {
    let Architecture::Feedforward(spec) = store.weights_arch() else {
        return Err(Error::Config("snake training needs a feed-forward network".into()));
    };
    let net = FeedforwardNet::new(&spec);
    let snap = store.pull();
    let ep = db.sample_episode(worker as u8, cfg.episode_len, rng)?;
    let bootstrap = match &ep.next_observation {
        Some(o) => net.forward(&snap.params, o)?.value,
        None => 0.0,
    };
    let returns = discounted_returns(&ep.rewards, bootstrap, cfg.gamma);
    let values = net.values(&snap.params, &ep.observations)?;
    let adv: Vec<f64> = returns.iter().zip(&values).map(|(r, v)| r - v).collect();
    let mut grads = vec![0.0; net.layout().total];
    let stats = net.loss_and_gradient(&snap.params, &ep.observations, &ep.actions, &returns, &adv, cfg.kappa, &mut grads)?;
    let receipt = store.push(&GradientBatch {
        grads,
        source_version: snap.version,
        steps: ep.rewards.len(),
    })?;
    Ok(UpdateRecord {
        episode,
        worker,
        loss_pi: -stats.policy_objective,
        loss_v: stats.value_loss,
        entropy: stats.mean_entropy(),
        reward_sum: ep.rewards.iter().sum(),
        staleness: receipt.staleness,
        version: receipt.version,
    })
}

/// Offline asynchronous training on the replay database. Worker `j` owns
/// window slot `j` and processes global episodes `j, j+W, j+2W, …`.
pub fn train_snake_offline(db: &OfflineDatabase, store: &GlobalStore, cfg: &SnakeTrainConfig) -> Result<TrainingReport> {
    if cfg.workers == 0 || cfg.workers > MAX_WINDOWS {
        return Err(Error::Config(format!("workers must be in 1..={MAX_WINDOWS}")));
    }
    let rng_for = |w: usize| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(w as u64 + 1);
        r
    };
    let mut lines = Vec::new();
    if cfg.deterministic {
        let mut rngs: Vec<ChaCha8Rng> = (0..cfg.workers).map(rng_for).collect();
        for episode in 0..cfg.episodes {
            let w = (episode % cfg.workers as u64) as usize;
            lines.push(ReportLine::Update(snake_update(db, store, cfg, w, episode, &mut rngs[w])?));
        }
    } else {
        let collected = Mutex::new(Vec::new());
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for w in 0..cfg.workers {
                let (collected, failure) = (&collected, &failure);
                scope.spawn(move || {
                    let mut rng = rng_for(w);
                    let mut episode = w as u64;
                    while episode < cfg.episodes {
                        if failure.lock().expect("lock").is_some() {
                            return;
                        }
                        match snake_update(db, store, cfg, w, episode, &mut rng) {
                            Ok(r) => collected.lock().expect("lock").push(r),
                            Err(e) => {
                                *failure.lock().expect("lock") = Some(e);
                                return;
                            }
                        }
                        episode += cfg.workers as u64;
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().expect("lock") {
            return Err(e);
        }
        let mut recs = collected.into_inner().expect("lock");
        recs.sort_by_key(|r| r.version);
        lines.extend(recs.into_iter().map(ReportLine::Update));
    }
    let stats = store.stats();
    Ok(TrainingReport {
        lines,
        attempted_pushes: store.attempted(),
        applied_pushes: stats.applied,
        final_version: store.version(),
        converged_at: None,
    })
}
