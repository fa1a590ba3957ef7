use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{derive_seed, RunConfig};
use super::eval::{evaluate_hexapod, greedy_snake_controller, HexapodEvaluation, HexapodPolicy};
use crate::a3c::{
    train_hexapod_centralized, train_hexapod_online, train_snake_offline, GlobalStore, OfflineDatabase, StepEvent,
    TrainingReport,
};
use crate::error::{Error, Result};
use crate::hexapod::{TraceLog, TraceRecord};
use crate::neural::{AdamConfig, Architecture, Checkpoint, FeedforwardSpec, RecurrentSpec, Weights};
use crate::shape::AdmittanceConfig;
use crate::snake::{
    evaluate_gait_cycles, evaluate_paired, generate_world, record_compliant_trial, GaitEvaluation, PegWorld,
    ReplayDatabase, ReplayHeader, StartPose,
};

/// Summary of one command, written with the exact config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub command: String,
    pub fingerprint: String,
    pub config: RunConfig,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metrics {
    Database(DbStats),
    Training(TrainingSummary),
    SnakeEval(GaitEvaluation),
    Compare(CompareMetrics),
    HexapodEval(HexapodEvaluation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbStats {
    pub trials: u32,
    pub records: u64,
    /// Mean centroid progress of the compliant trials in meters.
    pub mean_progress: f64,
    pub gains: Vec<AdmittanceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub episodes: u64,
    pub attempted_pushes: u64,
    pub applied_pushes: u64,
    pub final_version: u64,
    pub converged_at: Option<u64>,
}

impl From<&TrainingReport> for TrainingSummary {
    fn from(r: &TrainingReport) -> Self {
        let from_episodes = r.episodes().count() as u64;
        let episodes = if from_episodes > 0 {
            from_episodes
        } else {
            r.updates().count() as u64
        };
        Self {
            episodes,
            attempted_pushes: r.attempted_pushes,
            applied_pushes: r.applied_pushes,
            final_version: r.final_version,
            converged_at: r.converged_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub world_seed: u64,
    pub learned: Option<f64>,
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareMetrics {
    pub pairs: Vec<PairResult>,
    pub learned: GaitEvaluation,
    pub baseline: GaitEvaluation,
}

impl MetricsReport {
    pub fn new(command: &str, cfg: &RunConfig, metrics: Metrics) -> Self {
        Self {
            command: command.into(),
            fingerprint: cfg.fingerprint(),
            config: cfg.clone(),
            metrics,
        }
    }

    /// Writes `<reports>/<command>.json`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.command));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, self).map_err(std::io::Error::from)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(path)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    Ok(())
}

/// Diagonal M, B, K entries drawn uniformly from `range`.
pub fn sample_gains<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> Result<AdmittanceConfig> {
    let mut d = || [rng.random_range(range[0]..=range[1]), rng.random_range(range[0]..=range[1])];
    let (m, b, k) = (d(), d(), d());
    AdmittanceConfig::new(m, b, k)
}

fn db_trial_seed(cfg: &RunConfig, trial: u32) -> u64 {
    derive_seed(cfg.seed, &format!("db-trial-{trial}"))
}

/// World seeds of the paired evaluation suite.
pub fn evaluation_seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.compare.pairs)
        .map(|k| derive_seed(cfg.seed, &format!("eval-world-{k}")))
        .collect()
}

pub fn evaluation_cases(cfg: &RunConfig) -> Result<Vec<(PegWorld, StartPose)>> {
    evaluation_seeds(cfg)
        .into_iter()
        .map(|s| Ok((generate_world(s, &cfg.world)?, StartPose::sample(s, cfg.snake.max_heading))))
        .collect()
}

/// Runs the compliant trials with random gains, spread over the workers.
pub fn build_database(cfg: &RunConfig) -> Result<(ReplayDatabase, DbStats)> {
    cfg.validate()?;
    let trials = cfg.db.trials;
    let results: Mutex<Vec<Option<(Vec<crate::snake::Experience>, AdmittanceConfig, f64)>>> =
        Mutex::new(vec![None; trials as usize]);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let run = |t: u32| -> Result<()> {
        let seed = db_trial_seed(cfg, t);
        let world = generate_world(seed, &cfg.world)?;
        let start = StartPose::sample(seed, cfg.snake.max_heading);
        let gains = sample_gains(&mut ChaCha8Rng::seed_from_u64(seed), cfg.db.gain_range)?;
        let (rows, progress) = record_compliant_trial(&cfg.snake, &world, start, &gains, cfg.db.duration, t)?;
        results.lock().expect("lock")[t as usize] = Some((rows, gains, progress));
        Ok(())
    };
    let workers = if cfg.deterministic { 1 } else { cfg.workers };
    std::thread::scope(|scope| {
        for w in 0..workers {
            let (run, failure) = (&run, &failure);
            scope.spawn(move || {
                let mut t = w as u32;
                while t < trials {
                    if failure.lock().expect("lock").is_some() {
                        return;
                    }
                    if let Err(e) = run(t) {
                        *failure.lock().expect("lock") = Some(e);
                        return;
                    }
                    t += workers as u32;
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let mut db = ReplayDatabase::new(ReplayHeader::from_env(&cfg.snake));
    let mut gains = Vec::new();
    let mut progress = 0.0;
    for (rows, g, p) in results.into_inner().expect("lock").into_iter().flatten() {
        db.records.extend(rows);
        gains.push(g);
        progress += p;
    }
    let stats = DbStats {
        trials,
        records: db.records.len() as u64,
        mean_progress: if trials > 0 { progress / trials as f64 } else { 0.0 },
        gains,
    };
    Ok((db, stats))
}

pub fn generate_db(cfg: &RunConfig) -> Result<MetricsReport> {
    let (db, stats) = build_database(cfg)?;
    ensure_parent(&cfg.paths.db)?;
    db.save(&cfg.paths.db)?;
    let report = MetricsReport::new("generate-db", cfg, Metrics::Database(stats));
    report.write(&cfg.paths.reports)?;
    Ok(report)
}

fn write_training(cfg: &RunConfig, name: &str, ck: &Checkpoint, path: &Path, report: &TrainingReport) -> Result<MetricsReport> {
    ensure_parent(path)?;
    ck.save(path)?;
    std::fs::create_dir_all(&cfg.paths.reports)?;
    report.write_jsonl(&cfg.paths.reports.join(format!("{name}.jsonl")))?;
    let m = MetricsReport::new(name, cfg, Metrics::Training(report.into()));
    m.write(&cfg.paths.reports)?;
    Ok(m)
}

/// Offline training from the replay database; returns the final checkpoint.
pub fn train_snake_from(cfg: &RunConfig, db: ReplayDatabase) -> Result<(Checkpoint, TrainingReport)> {
    let tcfg = cfg.snake_train_config();
    let weights = Weights::init(
        Architecture::Feedforward(FeedforwardSpec::snake()),
        derive_seed(cfg.seed, "snake-init"),
    )?;
    let store = GlobalStore::new(weights, AdamConfig::new(tcfg.lr));
    let report = train_snake_offline(&OfflineDatabase::new(db), &store, &tcfg)?;
    Ok((store.checkpoint(), report))
}

pub fn train_snake(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let db = ReplayDatabase::load(&cfg.paths.db)?;
    let (ck, report) = train_snake_from(cfg, db)?;
    write_training(cfg, "train-snake", &ck, &cfg.paths.snake_checkpoint, &report)
}

/// Online hexapod training; `observer` sees every environment step.
pub fn train_hexapod_with(
    cfg: &RunConfig,
    centralized: bool,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<(Checkpoint, TrainingReport)> {
    cfg.validate()?;
    let tcfg = cfg.hexapod_train_config();
    let (spec, tag) = if centralized {
        (RecurrentSpec::centralized(), "hexapod-centralized-init")
    } else {
        (RecurrentSpec::leg(), "hexapod-init")
    };
    let weights = Weights::init(Architecture::Recurrent(spec), derive_seed(cfg.seed, tag))?;
    let store = GlobalStore::new(weights, AdamConfig::new(tcfg.lr));
    let report = if centralized {
        train_hexapod_centralized(&cfg.hexapod, &store, &tcfg, observer)?
    } else {
        train_hexapod_online(&cfg.hexapod, &store, &tcfg, observer)?
    };
    Ok((store.checkpoint(), report))
}

/// Trains and writes the checkpoint, the JSONL report and, for the
/// distributed controller, the HEXA episode trace.
pub fn train_hexapod(cfg: &RunConfig, centralized: bool) -> Result<MetricsReport> {
    let mut trace = TraceLog::new(cfg.hexapod.dt, cfg.hexapod.reward_offset);
    let mut observer = |e: &StepEvent| {
        trace.push(TraceRecord {
            episode: e.after.episode as u32,
            step: e.after.step as u32,
            observations: e.before.observations().map(|o| o.0),
            actions: e.actions.map(|a| a.index() as u8),
            rewards: *e.rewards,
            stabilized: crate::hexapod::is_stabilized(e.after, cfg.hexapod.pose_tol, cfg.hexapod.height_tol),
        })
    };
    let (ck, report) = train_hexapod_with(cfg, centralized, &mut observer)?;
    let (name, path) = if centralized {
        ("train-hexapod-centralized", &cfg.paths.centralized_checkpoint)
    } else {
        ("train-hexapod", &cfg.paths.hexapod_checkpoint)
    };
    let m = write_training(cfg, name, &ck, path, &report)?;
    trace.save(&cfg.paths.reports.join(format!("{name}.hexa")))?;
    Ok(m)
}

fn save_worlds(cfg: &RunConfig, cases: &[(PegWorld, StartPose)]) -> Result<()> {
    if let Some(dir) = &cfg.paths.worlds {
        std::fs::create_dir_all(dir)?;
        for (w, _) in cases {
            w.save(&dir.join(format!("world_{:016x}.txt", w.seed)))?;
        }
    }
    Ok(())
}

pub fn eval_snake(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let ck = Checkpoint::load(&cfg.paths.snake_checkpoint)?;
    greedy_snake_controller(&ck.weights)?;
    let cases = evaluation_cases(cfg)?;
    save_worlds(cfg, &cases)?;
    let eval = evaluate_gait_cycles(
        &cfg.snake,
        &mut || greedy_snake_controller(&ck.weights).expect("checked above"),
        &cases,
        cfg.compare.duration,
    )?;
    let report = MetricsReport::new("eval-snake", cfg, Metrics::SnakeEval(eval));
    report.write(&cfg.paths.reports)?;
    Ok(report)
}

/// Learned greedy policy against the compliant baseline on paired worlds.
pub fn compare_with(cfg: &RunConfig, weights: &Weights) -> Result<CompareMetrics> {
    greedy_snake_controller(weights)?;
    let cases = evaluation_cases(cfg)?;
    save_worlds(cfg, &cases)?;
    let baseline = cfg.compare.baseline;
    let (learned, base) = evaluate_paired(
        &cfg.snake,
        &mut || greedy_snake_controller(weights).expect("checked above"),
        &mut || baseline,
        &cases,
        cfg.compare.duration,
    )?;
    let pairs = cases
        .iter()
        .zip(learned.trials.iter().zip(&base.trials))
        .map(|((w, _), (l, b))| PairResult {
            world_seed: w.seed,
            learned: l.cycles_per_meter,
            baseline: b.cycles_per_meter,
        })
        .collect();
    Ok(CompareMetrics {
        pairs,
        learned,
        baseline: base,
    })
}

pub fn compare(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let ck = Checkpoint::load(&cfg.paths.snake_checkpoint)?;
    let report = MetricsReport::new("compare", cfg, Metrics::Compare(compare_with(cfg, &ck.weights)?));
    report.write(&cfg.paths.reports)?;
    Ok(report)
}

pub fn eval_hexapod(cfg: &RunConfig, quadruped: bool) -> Result<MetricsReport> {
    cfg.validate()?;
    let ck = Checkpoint::load(&cfg.paths.hexapod_checkpoint)?;
    let eval = evaluate_hexapod(
        &cfg.hexapod,
        HexapodPolicy::Network(&ck.weights),
        derive_seed(cfg.seed, "hexapod-eval"),
        cfg.hexapod_eval.resets,
        quadruped,
    )?;
    let name = if quadruped { "eval-quadruped" } else { "eval-hexapod" };
    let report = MetricsReport::new(name, cfg, Metrics::HexapodEval(eval));
    report.write(&cfg.paths.reports)?;
    Ok(report)
}
