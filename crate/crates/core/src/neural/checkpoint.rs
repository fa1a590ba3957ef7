use std::path::Path;

use super::adam::AdamState;
use super::arch::{Architecture, Weights};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ACWT";
const VERSION: u32 = 1;

/// Network parameters together with the optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub weights: Weights,
    pub adam: AdamState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(MAGIC, VERSION);
        w.str(&serde_json::to_string(&self.weights.arch).expect("architecture serializes"));
        w.u64(self.weights.version);
        w.u64(self.weights.params.len() as u64);
        w.f64s(&self.weights.params);
        w.u64(self.adam.step);
        w.f64s(&self.adam.m);
        w.f64s(&self.adam.v);
        w.seal()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
        let arch: Architecture = serde_json::from_str(&r.str()?)
            .map_err(|e| Error::Corrupt(format!("architecture descriptor: {e}")))?;
        arch.validate()
            .map_err(|_| Error::Corrupt("invalid architecture descriptor".into()))?;
        let version = r.u64()?;
        let n = r.u64()? as usize;
        if n != arch.layout().total || r.remaining() != 8 * (3 * n + 1) {
            return Err(Error::Corrupt("parameter count does not match the architecture".into()));
        }
        let params = r.f64s(n)?;
        let step = r.u64()?;
        let m = r.f64s(n)?;
        let v = r.f64s(n)?;
        r.finish()?;
        Ok(Self {
            weights: Weights {
                arch,
                params,
                version,
            },
            adam: AdamState { step, m, v },
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
