use super::layout::Layout;
use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl AdamConfig {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(40.0),
        }
    }
}

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// Outcome of one optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdamReport {
    pub skipped_blocks: usize,
    pub grad_norm: f64,
    pub clipped: bool,
}

/// One bias-corrected Adam update. Blocks containing a non-finite gradient
/// are left untouched (weights and moments) and counted.
pub fn adam_step(
    cfg: &AdamConfig,
    layout: &Layout,
    params: &mut [f64],
    state: &mut AdamState,
    grad: &[f64],
) -> Result<AdamReport> {
    if params.len() != layout.total || grad.len() != layout.total || state.m.len() != layout.total {
        return Err(contract("adam buffers do not match the parameter layout"));
    }
    let finite: Vec<bool> = (0..layout.blocks.len())
        .map(|k| grad[layout.range(k)].iter().all(|g| g.is_finite()))
        .collect();
    let sq: f64 = (0..layout.blocks.len())
        .filter(|&k| finite[k])
        .flat_map(|k| grad[layout.range(k)].iter())
        .map(|g| g * g)
        .sum();
    let norm = sq.sqrt();
    let scale = match cfg.clip_norm {
        Some(c) if norm > c => c / norm,
        _ => 1.0,
    };
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let mut report = AdamReport {
        grad_norm: norm,
        clipped: scale < 1.0,
        ..AdamReport::default()
    };
    for k in 0..layout.blocks.len() {
        if !finite[k] {
            report.skipped_blocks += 1;
            continue;
        }
        for i in layout.range(k) {
            let g = grad[i] * scale;
            state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
            state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
            let mhat = state.m[i] / bc1;
            let vhat = state.v[i] / bc2;
            params[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
    Ok(report)
}
