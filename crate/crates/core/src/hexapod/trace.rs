use std::path::Path;

use crate::codec::{ByteReader, ByteWriter};
use crate::cpg::LEGS;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HEXA";
const VERSION: u32 = 1;
const RECORD_BYTES: usize = 4 + 4 + LEGS * 7 * 8 + LEGS + LEGS * 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub episode: u32,
    pub step: u32,
    pub observations: [[f64; 7]; LEGS],
    pub actions: [u8; LEGS],
    pub rewards: [f64; LEGS],
    pub stabilized: bool,
}

/// Episode trace of the legged robot, appended step by step and written
/// with the checksum trailer on save.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub dt: f64,
    pub reward_offset: f64,
    pub records: Vec<TraceRecord>,
}

impl TraceLog {
    pub fn new(dt: f64, reward_offset: f64) -> Self {
        Self {
            dt,
            reward_offset,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(MAGIC, VERSION);
        w.f64(self.dt);
        w.f64(self.reward_offset);
        w.u64(self.records.len() as u64);
        for r in &self.records {
            w.u32(r.episode);
            w.u32(r.step);
            for o in &r.observations {
                w.f64s(o);
            }
            w.bytes(&r.actions);
            w.f64s(&r.rewards);
            w.u8(r.stabilized as u8);
        }
        w.seal()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
        let dt = r.f64()?;
        let reward_offset = r.f64()?;
        let count = r.u64()? as usize;
        if r.remaining() != count * RECORD_BYTES {
            return Err(Error::Corrupt("trace record count mismatch".into()));
        }
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let episode = r.u32()?;
            let step = r.u32()?;
            let mut observations = [[0.0; 7]; LEGS];
            for o in &mut observations {
                for v in o.iter_mut() {
                    *v = r.f64()?;
                }
            }
            let mut actions = [0u8; LEGS];
            for a in &mut actions {
                *a = r.u8()?;
            }
            let mut rewards = [0.0; LEGS];
            for v in &mut rewards {
                *v = r.f64()?;
            }
            let stabilized = match r.u8()? {
                0 => false,
                1 => true,
                _ => return Err(Error::Corrupt("bad stabilized flag".into())),
            };
            records.push(TraceRecord {
                episode,
                step,
                observations,
                actions,
                rewards,
                stabilized,
            });
        }
        r.finish()?;
        Ok(Self {
            dt,
            reward_offset,
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
}
