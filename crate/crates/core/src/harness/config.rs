use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::a3c::{HexapodTrainConfig, SnakeTrainConfig};
use crate::codec::checksum64;
use crate::error::{Error, Result};
use crate::hexapod::HexapodConfig;
use crate::shape::{AdmittanceConfig, MAX_WINDOWS};
use crate::snake::{SnakeEnvConfig, WorldConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub db: PathBuf,
    pub snake_checkpoint: PathBuf,
    pub hexapod_checkpoint: PathBuf,
    pub centralized_checkpoint: PathBuf,
    /// Training reports and evaluation metrics land here.
    pub reports: PathBuf,
    /// Evaluation worlds are written here as text files when set.
    pub worlds: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            db: "artifacts/snake.db".into(),
            snake_checkpoint: "artifacts/snake.acwt".into(),
            hexapod_checkpoint: "artifacts/hexapod.acwt".into(),
            centralized_checkpoint: "artifacts/hexapod_centralized.acwt".into(),
            reports: "artifacts/reports".into(),
            worlds: None,
        }
    }
}

impl Paths {
    /// Relative paths are taken relative to `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let r = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Self {
            db: r(&self.db),
            snake_checkpoint: r(&self.snake_checkpoint),
            hexapod_checkpoint: r(&self.hexapod_checkpoint),
            centralized_checkpoint: r(&self.centralized_checkpoint),
            reports: r(&self.reports),
            worlds: self.worlds.as_ref().map(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbConfig {
    pub trials: u32,
    /// Seconds simulated per trial.
    pub duration: f64,
    /// Every diagonal entry of M, B and K is uniform in this range.
    pub gain_range: [f64; 2],
}

impl Default for DbConfig {
    fn default() -> Self {
        Self {
            trials: 310,
            duration: 15.0,
            gain_range: [0.5, 5.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub pairs: u32,
    pub duration: f64,
    /// Gains of the compliant baseline.
    pub baseline: AdmittanceConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            pairs: 15,
            duration: 20.0,
            baseline: AdmittanceConfig::tuned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HexapodEvalConfig {
    pub resets: u64,
}

impl Default for HexapodEvalConfig {
    fn default() -> Self {
        Self { resets: 100 }
    }
}

/// Everything a command needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub deterministic: bool,
    pub paths: Paths,
    pub snake: SnakeEnvConfig,
    pub world: WorldConfig,
    pub db: DbConfig,
    pub snake_train: SnakeTrainConfig,
    pub compare: CompareConfig,
    pub hexapod: HexapodConfig,
    pub hexapod_train: HexapodTrainConfig,
    pub hexapod_eval: HexapodEvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: MAX_WINDOWS,
            deterministic: false,
            paths: Paths::default(),
            snake: SnakeEnvConfig::default(),
            world: WorldConfig::default(),
            db: DbConfig::default(),
            snake_train: SnakeTrainConfig::default(),
            compare: CompareConfig::default(),
            hexapod: HexapodConfig::default(),
            hexapod_train: HexapodTrainConfig::default(),
            hexapod_eval: HexapodEvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
            _ => Error::Io(e),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.paths = cfg.paths.resolved(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 || self.workers > MAX_WINDOWS {
            return Err(Error::Config(format!("workers must be in 1..={MAX_WINDOWS}")));
        }
        let [lo, hi] = self.db.gain_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config("gain_range must be positive and ordered".into()));
        }
        if !(self.db.duration >= 0.0 && self.compare.duration > 0.0) {
            return Err(Error::Config("durations must be positive".into()));
        }
        self.snake.serpenoid.validate()?;
        self.compare.baseline.validate()?;
        self.hexapod.validate()?;
        Ok(())
    }

    /// Hash of the canonical serialized form.
    pub fn fingerprint(&self) -> String {
        format!("{:016x}", checksum64(self.to_toml().as_bytes()))
    }

    /// Training configs with the run-level seed, worker count and
    /// scheduling mode filled in.
    pub fn snake_train_config(&self) -> SnakeTrainConfig {
        SnakeTrainConfig {
            seed: derive_seed(self.seed, "snake-train"),
            workers: self.workers,
            deterministic: self.deterministic,
            ..self.snake_train
        }
    }

    pub fn hexapod_train_config(&self) -> HexapodTrainConfig {
        HexapodTrainConfig {
            seed: derive_seed(self.seed, "hexapod-train"),
            deterministic: self.deterministic,
            ..self.hexapod_train
        }
    }
}

/// Independent seed for one named purpose under a root seed.
pub fn derive_seed(root: u64, purpose: &str) -> u64 {
    let mut bytes = root.to_le_bytes().to_vec();
    bytes.extend_from_slice(purpose.as_bytes());
    checksum64(&bytes)
}
