use nalgebra::{DVector, Matrix2xX};

use super::{SerpenoidConfig, ShapeParams};
use crate::error::{contract, Result};

/// 2×N Jacobian of the shape function with respect to `(A, ω_S)`.
pub type ShapeJacobian = Matrix2xX<f64>;

/// Joint angles `θ_i = θ₀ + A·sin(ω_S·s_i − ω_T·t)` for every joint.
pub fn serpenoid_angles(
    cfg: &SerpenoidConfig,
    amplitude: f64,
    spatial_freq: f64,
    t: f64,
) -> Vec<f64> {
    (0..cfg.num_joints)
        .map(|i| {
            cfg.theta0 + amplitude * (spatial_freq * cfg.joint_arc(i) - cfg.omega_t * t).sin()
        })
        .collect()
}

/// Analytic Jacobian of the shape function. Row 0 is `∂h/∂A`, row 1 is
/// `∂h/∂ω_S`.
pub fn shape_jacobian(cfg: &SerpenoidConfig, params: ShapeParams, t: f64) -> ShapeJacobian {
    let mut jac = ShapeJacobian::zeros(cfg.num_joints);
    for i in 0..cfg.num_joints {
        let s = cfg.joint_arc(i);
        let phase = params.spatial_freq * s - cfg.omega_t * t;
        jac[(0, i)] = phase.sin();
        jac[(1, i)] = params.amplitude * s * phase.cos();
    }
    jac
}

/// Maps joint-space external torques into the shape space: `F = J·μ_ext`.
pub fn project_torques(jacobian: &ShapeJacobian, torques: &[f64]) -> Result<[f64; 2]> {
    if jacobian.ncols() != torques.len() {
        return Err(contract(format!(
            "jacobian has {} columns but {} torques were given",
            jacobian.ncols(),
            torques.len()
        )));
    }
    let f = jacobian * DVector::from_column_slice(torques);
    Ok([f[0], f[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cfg() -> SerpenoidConfig {
        SerpenoidConfig::default()
    }

    #[test]
    fn zero_amplitude_gives_straight_body() {
        let angles = serpenoid_angles(&cfg(), 0.0, 2.7, 1.3);
        assert!(angles.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn hand_evaluated_angle() {
        // s = 0.5, t = 0: π/4·sin(1.5π) = −π/4.
        let c = SerpenoidConfig {
            module_length: 0.5,
            num_joints: 2,
            ..cfg()
        };
        let angles = serpenoid_angles(&c, PI / 4.0, 3.0 * PI, 0.0);
        assert!((angles[1] + PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_structure() {
        let c = cfg();
        let jac = shape_jacobian(&c, ShapeParams::new(0.0, 3.0 * PI), 0.7);
        assert!(jac.row(1).iter().all(|&v| v == 0.0));

        let jac = shape_jacobian(&c, ShapeParams::new(0.6, 3.0 * PI), 0.7);
        assert!((jac[(0, 0)] - (-c.omega_t * 0.7).sin()).abs() < 1e-15);
        assert_eq!(jac[(1, 0)], 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for _ in 0..100 {
            let a = rng.random_range(0.1..1.5);
            let w = rng.random_range(PI..6.0 * PI);
            let t = rng.random_range(0.0..20.0);
            let jac = shape_jacobian(&c, ShapeParams::new(a, w), t);
            let da: Vec<f64> = serpenoid_angles(&c, a + h, w, t)
                .iter()
                .zip(serpenoid_angles(&c, a - h, w, t))
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            let dw: Vec<f64> = serpenoid_angles(&c, a, w + h, t)
                .iter()
                .zip(serpenoid_angles(&c, a, w - h, t))
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            for i in 0..c.num_joints {
                for (analytic, numeric) in [(jac[(0, i)], da[i]), (jac[(1, i)], dw[i])] {
                    let scale = analytic.abs().max(1e-3);
                    assert!(
                        (analytic - numeric).abs() / scale < 1e-6,
                        "{analytic} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn projection_is_linear_and_checked() {
        let c = cfg();
        let jac = shape_jacobian(&c, ShapeParams::nominal(), 0.3);
        assert_eq!(project_torques(&jac, &vec![0.0; 8]).unwrap(), [0.0, 0.0]);

        let mut e3 = vec![0.0; 8];
        e3[3] = 1.0;
        let f = project_torques(&jac, &e3).unwrap();
        assert_eq!(f, [jac[(0, 3)], jac[(1, 3)]]);

        assert!(project_torques(&jac, &[1.0; 5]).is_err());
    }

    #[test]
    fn projection_matches_naive_loop() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let jac = shape_jacobian(
                &c,
                ShapeParams::new(rng.random_range(0.0..1.5), rng.random_range(3.0..18.0)),
                rng.random_range(0.0..5.0),
            );
            let mu: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f = project_torques(&jac, &mu).unwrap();
            for r in 0..2 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += jac[(r, k)] * mu[k];
                }
                assert!((acc - f[r]).abs() < 1e-12);
            }
        }
    }
}
