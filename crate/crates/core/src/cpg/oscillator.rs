use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEGS: usize = 6;

/// Superellipse level `|(x−cx)/a|ⁿ + |(y−cy)/b|ⁿ`.
pub fn superellipse(a: f64, b: f64, n: f64, center: [f64; 2], point: [f64; 2]) -> f64 {
    ((point[0] - center[0]) / a).abs().powf(n) + ((point[1] - center[1]) / b).abs().powf(n)
}

/// Analytic gradient of [`superellipse`] with respect to the point.
pub fn superellipse_gradient(a: f64, b: f64, n: f64, center: [f64; 2], point: [f64; 2]) -> [f64; 2] {
    let d = |u: f64, s: f64| -> f64 {
        let v = u / s;
        if v == 0.0 {
            0.0
        } else {
            n * v.abs().powf(n - 1.0) * v.signum() / s
        }
    };
    [d(point[0] - center[0], a), d(point[1] - center[1], b)]
}

/// Alternating-tripod coupling: `+1` between legs of the same tripod,
/// `−1` across tripods, zero diagonal. Legs are ordered LF, LM, LR, RF,
/// RM, RR; tripods are {LF, LR, RM} and {LM, RF, RR}.
pub fn tripod_coupling() -> [[f64; LEGS]; LEGS] {
    let mut k = [[0.0; LEGS]; LEGS];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v = if tripod_of(i) == tripod_of(j) { 1.0 } else { -1.0 };
            }
        }
    }
    k
}

pub fn tripod_of(leg: usize) -> usize {
    match leg {
        0 | 2 | 4 => 0,
        _ => 1,
    }
}

/// Coupled superellipse oscillators, one per leg. `x` is the axial
/// shoulder angle and `y` the sagittal one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpgConfig {
    pub omega: f64,
    pub forcing_gain: f64,
    pub coupling_strength: f64,
    pub coupling: [[f64; LEGS]; LEGS],
    pub ellipse_a: f64,
    pub ellipse_b: f64,
    pub curvature: f64,
    pub center_x: [f64; LEGS],
    pub center_y: [f64; LEGS],
    pub dt: f64,
}

impl Default for CpgConfig {
    fn default() -> Self {
        Self {
            omega: 0.1,
            forcing_gain: 5.0,
            coupling_strength: 0.5,
            coupling: tripod_coupling(),
            ellipse_a: 0.3,
            ellipse_b: 0.2,
            curvature: 4.0,
            center_x: [0.0; LEGS],
            center_y: [0.0; LEGS],
            dt: 0.02,
        }
    }
}

impl CpgConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ellipse_a > 0.0
            && self.ellipse_b > 0.0
            && self.curvature >= 2.0
            && self.dt > 0.0
            && self.omega.is_finite()
            && self.forcing_gain >= 0.0
            && self.coupling.iter().flatten().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "cpg needs a, b > 0, n ≥ 2, dt > 0 and finite gains".into(),
            ))
        }
    }

    fn center(&self, state: &CpgState, i: usize) -> [f64; 2] {
        [self.center_x[i], state.offsets[i]]
    }

    /// Number of RK4 substeps per `dt`, chosen from the largest linear rate
    /// of the vector field on the unit level set so the integrator stays in
    /// its stability region.
    pub fn substeps(&self, dt: f64) -> usize {
        let g = self.curvature / self.ellipse_a.min(self.ellipse_b);
        let rate = self.forcing_gain * g * g + self.omega.abs() * g + self.coupling_strength * 5.0;
        ((dt * rate / 0.25).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgState {
    pub x: [f64; LEGS],
    pub y: [f64; LEGS],
    /// Adapted sagittal centers `c_y`.
    pub offsets: [f64; LEGS],
}

impl CpgState {
    /// All oscillators resting at their centers.
    pub fn at_rest(cfg: &CpgConfig) -> Self {
        Self {
            x: cfg.center_x,
            y: cfg.center_y,
            offsets: cfg.center_y,
        }
    }

    pub fn level(&self, cfg: &CpgConfig, leg: usize) -> f64 {
        superellipse(
            cfg.ellipse_a,
            cfg.ellipse_b,
            cfg.curvature,
            cfg.center(self, leg),
            [self.x[leg], self.y[leg]],
        )
    }

    /// Oscillation phase of one leg, measured on the normalized ellipse.
    pub fn phase(&self, cfg: &CpgConfig, leg: usize) -> f64 {
        let c = cfg.center(self, leg);
        ((self.y[leg] - c[1]) / cfg.ellipse_b).atan2((self.x[leg] - c[0]) / cfg.ellipse_a)
    }
}

fn derivative(cfg: &CpgConfig, state: &CpgState, x: &[f64; LEGS], y: &[f64; LEGS]) -> ([f64; LEGS], [f64; LEGS]) {
    let mut dx = [0.0; LEGS];
    let mut dy = [0.0; LEGS];
    for i in 0..LEGS {
        let c = cfg.center(state, i);
        let p = [x[i], y[i]];
        let h = superellipse(cfg.ellipse_a, cfg.ellipse_b, cfg.curvature, c, p);
        let g = superellipse_gradient(cfg.ellipse_a, cfg.ellipse_b, cfg.curvature, c, p);
        let pull = cfg.forcing_gain * (1.0 - h);
        dx[i] = -cfg.omega * g[1] + pull * g[0];
        let coupling: f64 = (0..LEGS)
            .map(|j| cfg.coupling[i][j] * (y[j] - state.offsets[j]))
            .sum();
        dy[i] = cfg.omega * g[0] + pull * g[1] + cfg.coupling_strength * coupling;
    }
    (dx, dy)
}

/// Advances the oscillators by `dt` with classical RK4 (split into
/// [`CpgConfig::substeps`] pieces). Offsets are held constant.
pub fn cpg_step(cfg: &CpgConfig, state: &CpgState, dt: f64) -> CpgState {
    let n = cfg.substeps(dt);
    let h = dt / n as f64;
    let mut s = *state;
    let axpy = |a: &[f64; LEGS], k: &[f64; LEGS], f: f64| -> [f64; LEGS] {
        std::array::from_fn(|i| a[i] + f * k[i])
    };
    for _ in 0..n {
        let (k1x, k1y) = derivative(cfg, &s, &s.x, &s.y);
        let (k2x, k2y) = derivative(cfg, &s, &axpy(&s.x, &k1x, h / 2.0), &axpy(&s.y, &k1y, h / 2.0));
        let (k3x, k3y) = derivative(cfg, &s, &axpy(&s.x, &k2x, h / 2.0), &axpy(&s.y, &k2y, h / 2.0));
        let (k4x, k4y) = derivative(cfg, &s, &axpy(&s.x, &k3x, h), &axpy(&s.y, &k3y, h));
        for i in 0..LEGS {
            s.x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            s.y[i] += h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn uncoupled(n: f64) -> CpgConfig {
        CpgConfig {
            omega: 1.0,
            coupling_strength: 0.0,
            ellipse_a: 1.0,
            ellipse_b: 1.0,
            curvature: n,
            ..CpgConfig::default()
        }
    }

    #[test]
    fn superellipse_values() {
        assert_eq!(superellipse(1.0, 1.0, 2.0, [0.3, 0.4], [0.3, 0.4]), 0.0);
        assert_eq!(superellipse(1.0, 1.0, 2.0, [0.0, 0.0], [1.0, 0.0]), 1.0);
        assert!((superellipse(0.3, 0.2, 8.0, [0.1, -0.1], [0.4, 0.1]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (a, b, n) = (rng.random_range(0.2..1.5), rng.random_range(0.2..1.5), rng.random_range(2.0..8.0));
            let c = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let g = superellipse_gradient(a, b, n, c, p);
            let eps = 1e-6;
            for k in 0..2 {
                let mut hi = p;
                let mut lo = p;
                hi[k] += eps;
                lo[k] -= eps;
                let fd = (superellipse(a, b, n, c, hi) - superellipse(a, b, n, c, lo)) / (2.0 * eps);
                assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()), "{fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn limit_cycle_is_invariant() {
        let cfg = uncoupled(4.0);
        let mut s = CpgState::at_rest(&cfg);
        // Point exactly on |x|⁴ + |y|⁴ = 1.
        let x0 = 0.5f64;
        for i in 0..LEGS {
            s.x[i] = x0;
            s.y[i] = (1.0 - x0.powi(4)).powf(0.25);
        }
        for _ in 0..500 {
            s = cpg_step(&cfg, &s, cfg.dt);
            let h = s.level(&cfg, 0);
            assert!((h - 1.0).abs() < 1e-6, "{h}");
        }
    }

    #[test]
    fn circle_radius_converges() {
        let cfg = CpgConfig {
            curvature: 2.0,
            ..uncoupled(2.0)
        };
        let mut s = CpgState::at_rest(&cfg);
        s.x = [0.5; LEGS];
        let steps = (10.0 / cfg.forcing_gain / cfg.dt).ceil() as usize;
        for _ in 0..steps {
            s = cpg_step(&cfg, &s, cfg.dt);
        }
        let r = s.x[0].hypot(s.y[0]);
        assert!((r - 1.0).abs() < 1e-3, "radius {r}");
    }

    #[test]
    fn random_starts_reach_limit_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2.0, 4.0, 8.0] {
            let cfg = uncoupled(n);
            for _ in 0..20 {
                let mut s = CpgState::at_rest(&cfg);
                for i in 0..LEGS {
                    // Start on the level set H = h0 along a random ray.
                    let h0: f64 = rng.random_range(0.05..3.0);
                    let th: f64 = rng.random_range(0.0..2.0 * PI);
                    let dir = [th.cos(), th.sin()];
                    let unit = superellipse(1.0, 1.0, n, [0.0; 2], dir).powf(1.0 / n);
                    let r = h0.powf(1.0 / n) / unit;
                    s.x[i] = r * dir[0];
                    s.y[i] = r * dir[1];
                }
                for _ in 0..1000 {
                    s = cpg_step(&cfg, &s, cfg.dt);
                }
                for i in 0..LEGS {
                    let h = s.level(&cfg, i);
                    assert!((h - 1.0).abs() < 1e-3, "n={n} H={h}");
                }
            }
        }
    }

    #[test]
    fn tripod_phases_lock() {
        let cfg = CpgConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = CpgState::at_rest(&cfg);
        for i in 0..LEGS {
            s.x[i] = rng.random_range(-0.3..0.3);
            s.y[i] = rng.random_range(-0.2..0.2);
        }
        for _ in 0..4_000 {
            s = cpg_step(&cfg, &s, cfg.dt);
        }
        let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
        let p0 = s.phase(&cfg, 0);
        for j in 1..LEGS {
            let d = wrap(s.phase(&cfg, j) - p0);
            let target = if tripod_of(j) == 0 { 0.0 } else { PI };
            assert!(wrap(d - target).abs() < 0.05, "leg {j}: {d}");
        }
    }

    #[test]
    fn offset_shifts_center_not_amplitude() {
        let cfg = uncoupled(4.0);
        let run = |offset: f64| {
            let mut s = CpgState::at_rest(&cfg);
            s.offsets = [offset; LEGS];
            s.x = [0.5; LEGS];
            s.y = [offset; LEGS];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..3000 {
                s = cpg_step(&cfg, &s, cfg.dt);
                if k > 1500 {
                    lo = lo.min(s.y[0]);
                    hi = hi.max(s.y[0]);
                }
            }
            (lo, hi)
        };
        let (lo0, hi0) = run(0.0);
        let (lo1, hi1) = run(0.25);
        assert!(((hi1 - lo1) - (hi0 - lo0)).abs() < 1e-3);
        assert!((0.5 * (lo1 + hi1) - 0.25).abs() < 1e-3);
    }
}
