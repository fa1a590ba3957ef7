//! Activation windows anchored between zero-curvature points of the
//! serpenoid wave. Windows are identified by the integer index `k` of the
//! half-wave they cover: window `k` spans the backbone region where the
//! integrated wave phase lies in `[kπ, (k+1)π)`. As the wave phase grows,
//! every window slides tailward, the tail window eventually leaves the
//! body and a fresh window appears at the head.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{SerpenoidConfig, ShapeJacobian, ShapeParams, ShapeState};
use crate::error::{contract, Result};

/// Upper bound on simultaneously live windows. Unused slots are treated as
/// empty windows sitting at the nominal shape.
pub const MAX_WINDOWS: usize = 6;

/// Windows narrower than this (in normalized backbone units) are dropped.
const MIN_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Half-wave index this window is attached to.
    pub label: i64,
    pub start: f64,
    pub end: f64,
    /// Integrated wave phase at `start`.
    pub phase_start: f64,
    pub state: ShapeState,
}

impl Window {
    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.start && (sigma < self.end || (self.end >= 1.0 && sigma <= 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowLayout {
    /// Live windows ordered from head to tail.
    pub windows: Vec<Window>,
    /// Sigmoid steepness `m`.
    pub steepness: f64,
    /// Current wave phase `ω_T·t` (plus any initial offset).
    pub wave_phase: f64,
    pub nominal: ShapeParams,
    /// Backbone length used to convert normalized positions to arc length.
    pub backbone_length: f64,
}

/// Label bookkeeping produced by [`anchor_windows`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorEvents {
    pub created: Vec<i64>,
    pub retired: Vec<i64>,
}

/// Places windows between consecutive zero-curvature points of the wave at
/// `wave_phase`. Windows present in `previous` keep their shape state;
/// newly exposed half-waves start at the nominal shape.
pub fn anchor_windows(
    previous: &[Window],
    nominal: ShapeParams,
    wave_phase: f64,
    backbone_length: f64,
    steepness: f64,
) -> (WindowLayout, AnchorEvents) {
    let known: HashMap<i64, ShapeState> =
        previous.iter().map(|w| (w.label, w.state)).collect();
    let state_for = |k: i64| {
        known
            .get(&k)
            .copied()
            .unwrap_or_else(|| ShapeState::at_nominal(nominal))
    };

    let mut windows = Vec::new();
    let mut sigma = 0.0;
    let mut phase = -wave_phase;
    let mut label = (phase / PI).floor() as i64;
    loop {
        let state = state_for(label);
        let next_phase = (label + 1) as f64 * PI;
        let span = (next_phase - phase) / (state.spatial_freq() * backbone_length);
        let end = (sigma + span).min(1.0);
        if end - sigma > MIN_WIDTH {
            windows.push(Window {
                label,
                start: sigma,
                end,
                phase_start: phase,
                state,
            });
        }
        if sigma + span >= 1.0 - MIN_WIDTH {
            break;
        }
        sigma += span;
        phase = next_phase;
        label += 1;
    }
    if let Some(last) = windows.last_mut() {
        last.end = 1.0;
    }
    if windows.len() > MAX_WINDOWS {
        // Tail half-waves beyond the cap are absorbed by the last kept window.
        windows.truncate(MAX_WINDOWS);
        windows[MAX_WINDOWS - 1].end = 1.0;
    }

    let live: Vec<i64> = windows.iter().map(|w| w.label).collect();
    let before: Vec<i64> = previous.iter().map(|w| w.label).collect();
    let events = AnchorEvents {
        created: live.iter().copied().filter(|k| !before.contains(k)).collect(),
        retired: before.iter().copied().filter(|k| !live.contains(k)).collect(),
    };
    (
        WindowLayout {
            windows,
            steepness,
            wave_phase,
            nominal,
            backbone_length,
        },
        events,
    )
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + z.exp())
}

/// Blending weights of every live window at normalized position `sigma`.
/// Each window contributes its sigmoid plateau (minus the constant 1 the
/// two half-sigmoids add outside the window); weights are clipped to
/// `[0, 1]` and renormalized to sum to one.
pub fn window_weights(layout: &WindowLayout, sigma: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(contract(format!("backbone position {sigma} outside [0, 1]")));
    }
    let m = layout.steepness;
    let mut weights: Vec<f64> = layout
        .windows
        .iter()
        .map(|w| {
            (logistic(m * (w.start - sigma)) + logistic(m * (sigma - w.end)) - 1.0)
                .clamp(0.0, 1.0)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(weights)
}

impl WindowLayout {
    /// Layout for a fresh run: every window at the nominal shape.
    pub fn fresh(
        cfg: &SerpenoidConfig,
        nominal: ShapeParams,
        wave_phase: f64,
        steepness: f64,
    ) -> Self {
        anchor_windows(&[], nominal, wave_phase, cfg.backbone_length(), steepness).0
    }

    /// Re-anchors at a new wave phase, carrying per-window state along.
    pub fn advance(&self, wave_phase: f64) -> (Self, AnchorEvents) {
        anchor_windows(
            &self.windows,
            self.nominal,
            wave_phase,
            self.backbone_length,
            self.steepness,
        )
    }

    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|w| (w.start, w.end)).collect()
    }

    /// Shape parameters of slot `j`; padded slots report the nominal shape.
    pub fn slot_params(&self, j: usize) -> ShapeParams {
        self.windows
            .get(j)
            .map(|w| w.state.params)
            .unwrap_or(self.nominal)
    }

    /// Index of the live window owning normalized position `sigma`.
    pub fn window_at(&self, sigma: f64) -> usize {
        self.windows
            .iter()
            .position(|w| w.contains(sigma))
            .unwrap_or(self.windows.len().saturating_sub(1))
    }

    /// Joints owned by slot `j` (empty for padded slots).
    pub fn joints_of(&self, cfg: &SerpenoidConfig, j: usize) -> Vec<usize> {
        if j >= self.windows.len() {
            return Vec::new();
        }
        (0..cfg.num_joints)
            .filter(|&i| self.window_at(cfg.joint_sigma(i)) == j)
            .collect()
    }

    /// Integrated wave phase at `sigma`.
    pub fn phase_at(&self, sigma: f64) -> f64 {
        let w = &self.windows[self.window_at(sigma)];
        w.phase_start + w.state.spatial_freq() * self.backbone_length * (sigma - w.start)
    }

    /// Blended shape parameters at `sigma`.
    pub fn blended(&self, sigma: f64) -> ShapeParams {
        let weights = window_weights(self, sigma.clamp(0.0, 1.0)).expect("clamped");
        let mut out = ShapeParams::new(0.0, 0.0);
        for (w, win) in weights.iter().zip(&self.windows) {
            out.amplitude += w * win.state.amplitude();
            out.spatial_freq += w * win.state.spatial_freq();
        }
        out
    }

    /// Commanded joint angles: blended amplitude over the integrated phase.
    /// With a single shared shape this is exactly the serpenoid curve.
    pub fn joint_angles(&self, cfg: &SerpenoidConfig) -> Vec<f64> {
        (0..cfg.num_joints)
            .map(|i| {
                let sigma = cfg.joint_sigma(i);
                cfg.theta0 + self.blended(sigma).amplitude * self.phase_at(sigma).sin()
            })
            .collect()
    }

    /// Shape Jacobian evaluated with each joint's owning window and actual
    /// wave phase. Reduces to the single-shape Jacobian when all windows
    /// share one shape.
    pub fn joint_jacobian(&self, cfg: &SerpenoidConfig) -> ShapeJacobian {
        let mut jac = ShapeJacobian::zeros(cfg.num_joints);
        for i in 0..cfg.num_joints {
            let sigma = cfg.joint_sigma(i);
            let w = &self.windows[self.window_at(sigma)];
            let phase = self.phase_at(sigma);
            jac[(0, i)] = phase.sin();
            jac[(1, i)] = w.state.amplitude() * cfg.joint_arc(i) * phase.cos();
        }
        jac
    }

    /// Shape-space force seen by slot `j`: the Jacobian restricted to the
    /// window's joints applied to the external torques.
    pub fn window_force(&self, cfg: &SerpenoidConfig, j: usize, torques: &[f64]) -> [f64; 2] {
        let jac = self.joint_jacobian(cfg);
        let mut f = [0.0; 2];
        for i in self.joints_of(cfg, j) {
            f[0] += jac[(0, i)] * torques[i];
            f[1] += jac[(1, i)] * torques[i];
        }
        f
    }

    pub fn set_slot_state(&mut self, j: usize, state: ShapeState) {
        if let Some(w) = self.windows.get_mut(j) {
            w.state = state;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::serpenoid_angles;

    fn unit_layout(phase: f64) -> WindowLayout {
        anchor_windows(&[], ShapeParams::nominal(), phase, 1.0, 100.0).0
    }

    #[test]
    fn three_half_waves_at_zero_phase() {
        let layout = unit_layout(0.0);
        assert_eq!(layout.window_count(), 3);
        let expected = [(0.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0)];
        for ((s, e), (xs, xe)) in layout.bounds().into_iter().zip(expected) {
            assert!((s - xs).abs() < 1e-12 && (e - xe).abs() < 1e-12);
        }
    }

    #[test]
    fn half_period_advance_retires_and_creates_one() {
        let (mut layout, _) = anchor_windows(&[], ShapeParams::nominal(), 0.0, 1.0, 100.0);
        // Mark the tail window so we can watch it leave.
        let mut tail = layout.windows[2].state;
        tail.params.amplitude = 0.5;
        layout.windows[2].state = tail;
        let (next, events) = layout.advance(PI);
        assert_eq!(events.created, vec![-1]);
        assert_eq!(events.retired, vec![2]);
        assert_eq!(next.window_count(), 3);
        assert_eq!(next.windows[0].state.params, ShapeParams::nominal());
        // Windows 0 and 1 moved down by one slot, keeping their state.
        assert_eq!(next.windows[1].label, 0);
        assert!((next.windows[1].start - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn windows_slide_tailward() {
        let layout = unit_layout(0.3);
        let (later, _) = layout.advance(0.5);
        let w0 = layout.windows.iter().find(|w| w.label == 0).unwrap();
        let w1 = later.windows.iter().find(|w| w.label == 0).unwrap();
        assert!(w1.start > w0.start);
    }

    #[test]
    fn cap_at_six_windows() {
        let mut layout = unit_layout(0.4);
        for w in &mut layout.windows {
            w.state.params.spatial_freq = 6.0 * PI;
        }
        let (next, _) = layout.advance(0.45);
        assert!(next.window_count() <= MAX_WINDOWS);
        assert_eq!(next.windows.last().unwrap().end, 1.0);
    }

    #[test]
    fn padded_slots_are_nominal_and_empty() {
        let cfg = SerpenoidConfig::default();
        let layout = WindowLayout::fresh(&cfg, ShapeParams::nominal(), 0.0, 100.0);
        assert_eq!(layout.slot_params(5), ShapeParams::nominal());
        assert!(layout.joints_of(&cfg, 5).is_empty());
        assert_eq!(layout.window_force(&cfg, 5, &[1.0; 8]), [0.0, 0.0]);
    }

    #[test]
    fn crisp_weights_at_midpoint() {
        let layout = unit_layout(0.0);
        let w = window_weights(&layout, 0.5).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-6);
        assert!(w[0] < 1e-6 && w[2] < 1e-6);
    }

    #[test]
    fn raw_weights_sum_to_one_at_shared_boundary() {
        // Independent evaluation of the unnormalized sigmoid pairs.
        for m in [50.0, 100.0, 400.0] {
            let bounds = [(0.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0)];
            for b in [1.0 / 3.0, 2.0 / 3.0] {
                let sum: f64 = bounds
                    .iter()
                    .map(|&(s, e)| {
                        1.0 / (1.0 + f64::exp(m * (s - b))) + 1.0 / (1.0 + f64::exp(m * (b - e)))
                            - 1.0
                    })
                    .map(|w: f64| w.max(0.0))
                    .sum();
                assert!((sum - 1.0).abs() < 1e-6, "m={m} b={b} sum={sum}");
            }
        }
    }

    #[test]
    fn single_window_returns_its_shape() {
        let layout = WindowLayout {
            windows: vec![Window {
                label: 0,
                start: 0.0,
                end: 1.0,
                phase_start: 0.0,
                state: ShapeState::at_nominal(ShapeParams::new(0.3, 7.0)),
            }],
            steepness: 100.0,
            wave_phase: 0.0,
            nominal: ShapeParams::nominal(),
            backbone_length: 1.0,
        };
        for sigma in [0.01, 0.2, 0.5, 0.99] {
            let b = layout.blended(sigma);
            assert!((b.amplitude - 0.3).abs() < 1e-12);
            assert!((b.spatial_freq - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_position() {
        assert!(window_weights(&unit_layout(0.0), 1.2).is_err());
        assert!(window_weights(&unit_layout(0.0), -0.1).is_err());
    }

    #[test]
    fn uniform_shape_reproduces_serpenoid() {
        let cfg = SerpenoidConfig::default();
        for t in [0.0, 0.37, 2.9] {
            let phase = cfg.omega_t * t;
            let layout = WindowLayout::fresh(&cfg, ShapeParams::nominal(), phase, 100.0);
            let nominal = ShapeParams::nominal();
            let direct = serpenoid_angles(&cfg, nominal.amplitude, nominal.spatial_freq, t);
            for (a, b) in layout.joint_angles(&cfg).iter().zip(&direct) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn every_joint_in_exactly_one_live_window() {
        let cfg = SerpenoidConfig::default();
        let mut layout = WindowLayout::fresh(&cfg, ShapeParams::nominal(), 0.0, 100.0);
        for step in 1..400 {
            layout = layout.advance(step as f64 * 0.05).0;
            assert!(layout.window_count() <= MAX_WINDOWS);
            let mut owned = vec![0; cfg.num_joints];
            for j in 0..MAX_WINDOWS {
                for i in layout.joints_of(&cfg, j) {
                    owned[i] += 1;
                }
            }
            assert!(owned.iter().all(|&c| c == 1));
        }
    }
}
