use std::f64::consts::PI;

use super::body::SnakeBody;
use crate::error::{contract, Result};
use crate::shape::{SerpenoidConfig, ShapeBounds, ShapeParams, WindowLayout, MAX_WINDOWS};

/// Per-window state `⟨τ, β, F, β₀⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnakeObservation {
    /// Normalized wave phase in `[0, 1)`.
    pub modular_time: f64,
    pub beta: ShapeParams,
    /// External torques of the window projected into shape space.
    pub projected_torque: [f64; 2],
    pub beta_nominal: ShapeParams,
}

impl SnakeObservation {
    pub const LEN: usize = 7;

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.modular_time,
            self.beta.amplitude,
            self.beta.spatial_freq,
            self.projected_torque[0],
            self.projected_torque[1],
            self.beta_nominal.amplitude,
            self.beta_nominal.spatial_freq,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            modular_time: v[0],
            beta: ShapeParams::new(v[1], v[2]),
            projected_torque: [v[3], v[4]],
            beta_nominal: ShapeParams::new(v[5], v[6]),
        }
    }
}

/// One of the nine `(ΔA, Δω)` increments, encoded as
/// `3·amp + freq` with `0 → −Δ`, `1 → 0`, `2 → +Δ` per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SnakeAction(u8);

impl SnakeAction {
    pub const COUNT: usize = 9;
    pub const IDLE: SnakeAction = SnakeAction(4);

    pub fn new(index: usize) -> Result<Self> {
        if index < Self::COUNT {
            Ok(Self(index as u8))
        } else {
            Err(contract(format!("snake action index {index} out of range")))
        }
    }

    pub fn from_signs(amp: i8, freq: i8) -> Self {
        Self(((amp.signum() + 1) * 3 + (freq.signum() + 1)) as u8)
    }

    pub fn index(&self) -> usize {
        self.0 as usize
    }

    pub fn signs(&self) -> (i8, i8) {
        ((self.0 / 3) as i8 - 1, (self.0 % 3) as i8 - 1)
    }

    /// Shape-parameter rates `(a_A, a_ω)` for increment sizes `(Δ_A, Δ_ω)`.
    pub fn rates(&self, delta: [f64; 2]) -> [f64; 2] {
        let (a, f) = self.signs();
        [a as f64 * delta[0], f as f64 * delta[1]]
    }

    /// Nearest grid action to a continuous shape-parameter rate.
    pub fn quantize(rate: [f64; 2], delta: [f64; 2]) -> Self {
        let snap = |r: f64, d: f64| -> i8 {
            if r > 0.5 * d {
                1
            } else if r < -0.5 * d {
                -1
            } else {
                0
            }
        };
        Self::from_signs(snap(rate[0], delta[0]), snap(rate[1], delta[1]))
    }
}

/// One recorded window step of a compliant-controller trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub trial_id: u32,
    pub window_id: u8,
    pub step_index: u32,
    pub observation: SnakeObservation,
    pub action: SnakeAction,
    pub reward: f64,
}

/// `τ = (t mod T_s)/T_s` computed from the wave phase `ω_T·t`.
pub fn modular_time(wave_phase: f64) -> f64 {
    let tau = wave_phase.rem_euclid(2.0 * PI) / (2.0 * PI);
    if tau >= 1.0 - 1e-12 {
        0.0
    } else {
        tau
    }
}

/// Observation of window slot `window_id`. Padded slots see the nominal
/// shape and no torque.
pub fn observe(
    cfg: &SerpenoidConfig,
    body: &SnakeBody,
    layout: &WindowLayout,
    window_id: usize,
) -> Result<SnakeObservation> {
    if window_id >= MAX_WINDOWS {
        return Err(contract(format!("window id {window_id} >= {MAX_WINDOWS}")));
    }
    let projected_torque = if window_id < layout.window_count() {
        layout.window_force(cfg, window_id, &body.external_torques)
    } else {
        [0.0; 2]
    };
    Ok(SnakeObservation {
        modular_time: modular_time(layout.wave_phase),
        beta: layout.slot_params(window_id),
        projected_torque,
        beta_nominal: layout.nominal,
    })
}

/// `β_j ← clamp(β_j + a_j·dt)` for every live window.
pub fn apply_actions(
    layout: &WindowLayout,
    actions: &[SnakeAction; MAX_WINDOWS],
    delta: [f64; 2],
    bounds: &ShapeBounds,
    dt: f64,
) -> Result<WindowLayout> {
    if !(dt > 0.0) {
        return Err(contract("apply_actions needs dt > 0"));
    }
    let mut out = layout.clone();
    for (w, action) in out.windows.iter_mut().zip(actions) {
        let r = action.rates(delta);
        let p = w.state.params;
        w.state.params = bounds.clamp(ShapeParams::new(
            p.amplitude + r[0] * dt,
            p.spatial_freq + r[1] * dt,
        ));
        w.state.rates = r;
    }
    Ok(out)
}

/// `tanh(λ_r·(‖X‖ − ‖X₀‖))` with positions expressed relative to the
/// chosen origin.
pub fn shared_reward(now: [f64; 2], reference: [f64; 2], lambda_r: f64) -> f64 {
    (lambda_r * (now[0].hypot(now[1]) - reference[0].hypot(reference[1]))).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::SerpenoidConfig;

    #[test]
    fn action_encoding() {
        assert_eq!(SnakeAction::IDLE.signs(), (0, 0));
        assert_eq!(SnakeAction::new(0).unwrap().signs(), (-1, -1));
        assert_eq!(SnakeAction::new(8).unwrap().signs(), (1, 1));
        assert!(SnakeAction::new(9).is_err());
        for i in 0..9 {
            let a = SnakeAction::new(i).unwrap();
            let (x, y) = a.signs();
            assert_eq!(SnakeAction::from_signs(x, y), a);
        }
    }

    #[test]
    fn quantize_to_nearest() {
        let d = [0.005, 0.012];
        assert_eq!(SnakeAction::quantize([0.0, 0.0], d), SnakeAction::IDLE);
        assert_eq!(SnakeAction::quantize([0.1, -3.0], d).signs(), (1, -1));
        assert_eq!(SnakeAction::quantize([0.002, 0.007], d).signs(), (0, 1));
    }

    #[test]
    fn modular_time_wraps() {
        let cfg = SerpenoidConfig::default();
        for k in 0..5 {
            let t = k as f64 * cfg.period();
            assert!(modular_time(cfg.omega_t * t) < 1e-9);
        }
        assert!((modular_time(PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reward_values() {
        assert_eq!(shared_reward([0.0, 0.0], [0.0, 0.0], 100.0), 0.0);
        assert!((shared_reward([0.01, 0.0], [0.0, 0.0], 100.0) - 1f64.tanh()).abs() < 1e-15);
        assert!((shared_reward([0.01, 0.0], [0.0, 0.0], 100.0) - 0.761_594_155_955_764_9).abs() < 1e-12);
        let big = shared_reward([30.0, 0.0], [0.0, 0.0], 100.0);
        assert!(big <= 1.0 && big > 0.99);
    }

    #[test]
    fn observation_array_round_trip() {
        let o = SnakeObservation {
            modular_time: 0.25,
            beta: ShapeParams::new(0.7, 9.0),
            projected_torque: [0.1, -0.2],
            beta_nominal: ShapeParams::nominal(),
        };
        assert_eq!(SnakeObservation::from_array(o.to_array()), o);
    }
}
