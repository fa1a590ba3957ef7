use std::path::Path;

use super::env::SnakeEnvConfig;
use super::mdp::{Experience, SnakeAction, SnakeObservation};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SNKE";
const VERSION: u32 = 1;
/// Bytes per record: trial u32, window u8, step u32, 7 f64, action u8, reward f64.
pub const RECORD_BYTES: usize = 4 + 1 + 4 + 7 * 8 + 1 + 8;

/// Constants the database was recorded with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayHeader {
    pub num_joints: u32,
    pub dt: f64,
    pub delta_amplitude: f64,
    pub delta_spatial_freq: f64,
    pub lambda_r: f64,
}

impl ReplayHeader {
    pub fn from_env(cfg: &SnakeEnvConfig) -> Self {
        Self {
            num_joints: cfg.serpenoid.num_joints as u32,
            dt: cfg.serpenoid.dt,
            delta_amplitude: cfg.delta_amplitude,
            delta_spatial_freq: cfg.delta_spatial_freq,
            lambda_r: cfg.lambda_r,
        }
    }
}

/// Experience rows of many compliant trials, ordered by trial, step, window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayDatabase {
    pub header: ReplayHeader,
    pub records: Vec<Experience>,
}

impl ReplayDatabase {
    pub fn new(header: ReplayHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut w = ByteWriter::with_header(MAGIC, VERSION);
        w.u32(h.num_joints);
        w.f64s(&[h.dt, h.delta_amplitude, h.delta_spatial_freq, h.lambda_r]);
        w.u64(self.records.len() as u64);
        for r in &self.records {
            w.u32(r.trial_id);
            w.u8(r.window_id);
            w.u32(r.step_index);
            w.f64s(&r.observation.to_array());
            w.u8(r.action.index() as u8);
            w.f64(r.reward);
        }
        w.seal()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
        let num_joints = r.u32()?;
        let [dt, delta_amplitude, delta_spatial_freq, lambda_r] = [r.f64()?, r.f64()?, r.f64()?, r.f64()?];
        let count = r.u64()? as usize;
        if r.remaining() != count * RECORD_BYTES {
            return Err(Error::Corrupt(format!(
                "record count {count} does not match {} payload bytes",
                r.remaining()
            )));
        }
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let trial_id = r.u32()?;
            let window_id = r.u8()?;
            let step_index = r.u32()?;
            let mut obs = [0.0; 7];
            for v in &mut obs {
                *v = r.f64()?;
            }
            let action = SnakeAction::new(r.u8()? as usize)
                .map_err(|_| Error::Corrupt("action index out of range".into()))?;
            let reward = r.f64()?;
            records.push(Experience {
                trial_id,
                window_id,
                step_index,
                observation: SnakeObservation::from_array(obs),
                action,
                reward,
            });
        }
        r.finish()?;
        Ok(Self {
            header: ReplayHeader {
                num_joints,
                dt,
                delta_amplitude,
                delta_spatial_freq,
                lambda_r,
            },
            records,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn trial_count(&self) -> usize {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.trial_id).collect();
        ids.dedup();
        ids.len()
    }
}
