use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::codec::checksum64;
use crate::error::{contract, Result};
use crate::neural::{adam_step, AdamConfig, AdamState, Checkpoint, Layout, Weights};

/// Gradients computed by a worker against one weight version.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBatch {
    pub grads: Vec<f64>,
    pub source_version: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreStats {
    pub applied: u64,
    pub skipped_blocks: u64,
    /// Histogram of `version at apply − source version`.
    pub staleness: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PushReceipt {
    pub version: u64,
    pub staleness: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub params: Vec<f64>,
    pub version: u64,
}

#[derive(Debug)]
struct Inner {
    weights: Weights,
    adam: AdamState,
    stats: StoreStats,
    ledger: Option<Vec<u64>>,
}

/// Shared network with its optimizer. Every push applies one Adam step
/// under the lock and bumps the version; every pull copies one version.
#[derive(Debug)]
pub struct GlobalStore {
    inner: Mutex<Inner>,
    attempted: AtomicU64,
    layout: Layout,
    adam_cfg: AdamConfig,
}

pub fn params_checksum(params: &[f64]) -> u64 {
    let bytes: Vec<u8> = params.iter().flat_map(|v| v.to_le_bytes()).collect();
    checksum64(&bytes)
}

impl GlobalStore {
    pub fn new(weights: Weights, adam_cfg: AdamConfig) -> Self {
        let adam = AdamState::new(weights.params.len());
        Self::from_checkpoint(Checkpoint { weights, adam }, adam_cfg)
    }

    pub fn from_checkpoint(ck: Checkpoint, adam_cfg: AdamConfig) -> Self {
        let layout = ck.weights.layout();
        Self {
            inner: Mutex::new(Inner {
                weights: ck.weights,
                adam: ck.adam,
                stats: StoreStats::default(),
                ledger: None,
            }),
            attempted: AtomicU64::new(0),
            layout,
            adam_cfg,
        }
    }

    /// Records the parameter checksum of every version from now on.
    pub fn with_ledger(self) -> Self {
        {
            let mut g = self.inner.lock().expect("store lock");
            let sum = params_checksum(&g.weights.params);
            let v = g.weights.version as usize;
            let mut ledger = vec![0; v];
            ledger.push(sum);
            g.ledger = Some(ledger);
        }
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn weights_arch(&self) -> crate::neural::Architecture {
        self.inner.lock().expect("store lock").weights.arch.clone()
    }

    pub fn push(&self, batch: &GradientBatch) -> Result<PushReceipt> {
        self.attempted.fetch_add(1, Ordering::SeqCst);
        if batch.grads.len() != self.layout.total {
            return Err(contract("gradient batch does not match the store layout"));
        }
        let mut g = self.inner.lock().expect("store lock");
        let inner = &mut *g;
        let report = adam_step(
            &self.adam_cfg,
            &self.layout,
            &mut inner.weights.params,
            &mut inner.adam,
            &batch.grads,
        )?;
        let staleness = inner.weights.version.saturating_sub(batch.source_version);
        inner.weights.version += 1;
        inner.stats.applied += 1;
        inner.stats.skipped_blocks += report.skipped_blocks as u64;
        *inner.stats.staleness.entry(staleness).or_insert(0) += 1;
        if let Some(ledger) = inner.ledger.as_mut() {
            ledger.push(params_checksum(&inner.weights.params));
        }
        Ok(PushReceipt {
            version: inner.weights.version,
            staleness,
        })
    }

    pub fn pull(&self) -> Snapshot {
        let g = self.inner.lock().expect("store lock");
        Snapshot {
            params: g.weights.params.clone(),
            version: g.weights.version,
        }
    }

    pub fn version(&self) -> u64 {
        self.inner.lock().expect("store lock").weights.version
    }

    pub fn attempted(&self) -> u64 {
        self.attempted.load(Ordering::SeqCst)
    }

    pub fn stats(&self) -> StoreStats {
        self.inner.lock().expect("store lock").stats.clone()
    }

    pub fn ledger(&self) -> Option<Vec<u64>> {
        self.inner.lock().expect("store lock").ledger.clone()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let g = self.inner.lock().expect("store lock");
        Checkpoint {
            weights: g.weights.clone(),
            adam: g.adam.clone(),
        }
    }

    pub fn weights(&self) -> Weights {
        self.inner.lock().expect("store lock").weights.clone()
    }
}
