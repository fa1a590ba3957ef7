use serde::{Deserialize, Serialize};

use super::{ShapeBounds, ShapeParams, ShapeState};
use crate::error::{contract, Error, Result};

/// Diagonal mass, damping and spring matrices of the shape-space
/// admittance law `M β̈ + B β̇ + K (β − β₀) = F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittanceConfig {
    pub mass: [f64; 2],
    pub damping: [f64; 2],
    pub spring: [f64; 2],
}

impl AdmittanceConfig {
    pub fn new(mass: [f64; 2], damping: [f64; 2], spring: [f64; 2]) -> Result<Self> {
        let cfg = Self { mass, damping, spring };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hand-tuned gains used for the compliant baseline.
    pub fn tuned() -> Self {
        Self {
            mass: [1.5, 2.0],
            damping: [3.0, 1.0],
            spring: [5.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.mass.iter().chain(&self.damping).chain(&self.spring);
        if all.into_iter().all(|&v| v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(
                "admittance diagonals must be positive and finite".into(),
            ))
        }
    }

    /// Steady state under a constant force: `β₀ + K⁻¹ F`.
    pub fn equilibrium(&self, nominal: ShapeParams, force: [f64; 2]) -> ShapeParams {
        ShapeParams::new(
            nominal.amplitude + force[0] / self.spring[0],
            nominal.spatial_freq + force[1] / self.spring[1],
        )
    }
}

/// One semi-implicit Euler step of the admittance law, followed by the
/// shape bounds. A clamped component has its rate zeroed.
pub fn admittance_step(
    cfg: &AdmittanceConfig,
    bounds: &ShapeBounds,
    state: &ShapeState,
    force: [f64; 2],
    dt: f64,
) -> Result<ShapeState> {
    if !(dt > 0.0) {
        return Err(contract("admittance step needs dt > 0"));
    }
    let beta = state.params.as_array();
    let nominal = state.nominal.as_array();
    let mut rates = state.rates;
    let mut next = [0.0; 2];
    for k in 0..2 {
        let accel =
            (force[k] - cfg.damping[k] * rates[k] - cfg.spring[k] * (beta[k] - nominal[k]))
                / cfg.mass[k];
        rates[k] += dt * accel;
        next[k] = beta[k] + dt * rates[k];
    }
    let raw = ShapeParams::new(next[0], next[1]);
    let clamped = bounds.clamp(raw);
    if clamped.amplitude != raw.amplitude {
        rates[0] = 0.0;
    }
    if clamped.spatial_freq != raw.spatial_freq {
        rates[1] = 0.0;
    }
    Ok(ShapeState {
        params: clamped,
        rates,
        nominal: state.nominal,
    })
}
