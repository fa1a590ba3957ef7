//! Serpenoid shape-space machinery: curve evaluation, the shape Jacobian,
//! admittance dynamics on the shape parameters, and sliding activation
//! windows.

mod admittance;
mod serpenoid;
mod windows;

pub use admittance::{admittance_step, AdmittanceConfig};
pub use serpenoid::{project_torques, serpenoid_angles, shape_jacobian, ShapeJacobian};
pub use windows::{anchor_windows, window_weights, Window, WindowLayout, MAX_WINDOWS};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fixed parameters of the serpenoid wave and the joint layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SerpenoidConfig {
    /// Angular offset added to every joint (radians).
    pub theta0: f64,
    /// Temporal frequency of the wave (rad/s).
    pub omega_t: f64,
    /// Spacing between consecutive joints along the backbone (meters).
    pub module_length: f64,
    pub num_joints: usize,
    /// Control period (seconds).
    pub dt: f64,
}

impl SerpenoidConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_joints < 1 {
            return Err(Error::Config("num_joints must be at least 1".into()));
        }
        if !(self.module_length > 0.0) || !(self.dt > 0.0) || !(self.omega_t > 0.0) {
            return Err(Error::Config(
                "module_length, dt and omega_t must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Distance of joint `i` from the head joint: `s_i = i * l_s`.
    pub fn joint_arc(&self, i: usize) -> f64 {
        i as f64 * self.module_length
    }

    /// Arc length covered by the joints, used to normalize backbone
    /// positions onto `[0, 1]`.
    pub fn backbone_length(&self) -> f64 {
        (self.num_joints.max(2) - 1) as f64 * self.module_length
    }

    /// Normalized backbone position of joint `i`.
    pub fn joint_sigma(&self, i: usize) -> f64 {
        if self.num_joints == 1 {
            0.0
        } else {
            self.joint_arc(i) / self.backbone_length()
        }
    }

    /// Period of the serpenoid wave, `2π / ω_T`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_t
    }
}

impl Default for SerpenoidConfig {
    fn default() -> Self {
        Self {
            theta0: 0.0,
            omega_t: 1.8,
            module_length: 1.0 / 7.0,
            num_joints: 8,
            dt: PI / 160.0,
        }
    }
}

/// The two serpenoid shape variables `(A, ω_S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    pub amplitude: f64,
    pub spatial_freq: f64,
}

impl ShapeParams {
    pub const fn new(amplitude: f64, spatial_freq: f64) -> Self {
        Self { amplitude, spatial_freq }
    }

    /// Nominal gait used throughout the experiments: `(π/4, 3π)`.
    pub const fn nominal() -> Self {
        Self::new(PI / 4.0, 3.0 * PI)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.amplitude, self.spatial_freq]
    }

    pub fn distance(&self, other: &ShapeParams) -> f64 {
        (self.amplitude - other.amplitude).hypot(self.spatial_freq - other.spatial_freq)
    }
}

/// Physical limits applied after every admittance or action update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeBounds {
    pub amplitude: (f64, f64),
    pub spatial_freq: (f64, f64),
}

impl Default for ShapeBounds {
    fn default() -> Self {
        Self {
            amplitude: (0.0, PI / 2.0),
            spatial_freq: (PI, 6.0 * PI),
        }
    }
}

impl ShapeBounds {
    pub fn clamp(&self, p: ShapeParams) -> ShapeParams {
        ShapeParams::new(
            p.amplitude.clamp(self.amplitude.0, self.amplitude.1),
            p.spatial_freq.clamp(self.spatial_freq.0, self.spatial_freq.1),
        )
    }
}

/// Shape parameters of one window together with their rates and the
/// nominal values the admittance dynamics relax toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeState {
    pub params: ShapeParams,
    pub rates: [f64; 2],
    pub nominal: ShapeParams,
}

impl ShapeState {
    /// State at rest on the nominal shape.
    pub fn at_nominal(nominal: ShapeParams) -> Self {
        Self {
            params: nominal,
            rates: [0.0; 2],
            nominal,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.params.amplitude
    }

    pub fn spatial_freq(&self) -> f64 {
        self.params.spatial_freq
    }

    /// `½ β̇ᵀ M β̇ + ½ (β − β₀)ᵀ K (β − β₀)`.
    pub fn energy(&self, cfg: &AdmittanceConfig) -> f64 {
        let p = self.params.as_array();
        let n = self.nominal.as_array();
        (0..2)
            .map(|k| {
                0.5 * cfg.mass[k] * self.rates[k] * self.rates[k]
                    + 0.5 * cfg.spring[k] * (p[k] - n[k]) * (p[k] - n[k])
            })
            .sum()
    }
}
