use nalgebra::{Matrix3, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coxa, femur and tibia lengths plus the lateral foot distance the distal
/// joint holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegGeometry {
    pub coxa: f64,
    pub femur: f64,
    pub tibia: f64,
    pub reach: f64,
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self {
            coxa: 0.05,
            femur: 0.12,
            tibia: 0.15,
            reach: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub theta3: f64,
    /// True when the target was outside the workspace and got clamped.
    pub clamped: bool,
}

impl LegGeometry {
    /// Horizontal distance of the foot from the shoulder axis along the leg's
    /// own plane, times `cos x` to get the lateral distance from the body.
    /// The tibia elevation is `y − θ₃`, so `θ₃ = 0` is a straight leg.
    pub fn lateral_reach(&self, x: f64, y: f64, theta3: f64) -> f64 {
        (self.coxa + self.femur * y.cos() + self.tibia * (y - theta3).cos()) * x.cos()
    }

    /// Foot position in the shoulder frame: `(forward, outward, up)` before
    /// mirroring for the body side.
    pub fn foot(&self, x: f64, y: f64, theta3: f64) -> [f64; 3] {
        let r = self.coxa + self.femur * y.cos() + self.tibia * (y - theta3).cos();
        let z = self.femur * y.sin() + self.tibia * (y - theta3).sin();
        [r * x.sin(), r * x.cos(), z]
    }

    /// Distal angle keeping the foot at lateral distance `target` from the
    /// shoulder. The foot is placed below the knee.
    pub fn distal_ik(&self, x: f64, y: f64, target: f64) -> IkSolution {
        let r = target / x.cos();
        let c = (r - self.coxa - self.femur * y.cos()) / self.tibia;
        let clamped = !(-1.0..=1.0).contains(&c) || !c.is_finite();
        let c = if c.is_finite() { c.clamp(-1.0, 1.0) } else { 1.0 };
        let psi = -c.acos();
        IkSolution {
            theta3: y - psi,
            clamped,
        }
    }
}

/// Shoulder layout and body orientation used by the pose-error terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyKinematics {
    /// Shoulder positions in the body frame, one column per leg.
    pub shoulders: Matrix3xX<f64>,
    /// Body orientation in the world frame.
    pub pose: Matrix3<f64>,
    pub desired_height: f64,
    pub leg: LegGeometry,
}

/// `T·SP`, returned as its three rows `(XE, YE, PE)`.
pub fn pose_errors(pose: &Matrix3<f64>, shoulders: &Matrix3xX<f64>) -> [Vec<f64>; 3] {
    let m = pose * shoulders;
    std::array::from_fn(|r| m.row(r).iter().copied().collect())
}

/// Least-squares plane through the grounded feet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    pub point: Vector3<f64>,
    /// Unit normal with a positive vertical component.
    pub normal: Vector3<f64>,
}

impl GroundPlane {
    pub fn fit(feet: &[Vector3<f64>]) -> Result<Self> {
        if feet.len() < 3 {
            return Err(Error::Estimation(format!(
                "{} grounded feet, need at least 3",
                feet.len()
            )));
        }
        let centroid = feet.iter().sum::<Vector3<f64>>() / feet.len() as f64;
        let mut cov = Matrix3::zeros();
        for f in feet {
            let d = f - centroid;
            cov += d * d.transpose();
        }
        let eig = cov.symmetric_eigen();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let spread = eig.eigenvalues[order[1]];
        let scale = eig.eigenvalues[order[2]].max(1e-300);
        if spread <= 1e-12 * scale || spread <= 1e-18 {
            return Err(Error::Estimation("grounded feet are collinear".into()));
        }
        let mut normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
        if normal.z < 0.0 {
            normal = -normal;
        }
        if normal.z.abs() < 1e-9 {
            return Err(Error::Estimation("ground plane is vertical".into()));
        }
        Ok(Self {
            point: centroid,
            normal: normal.normalize(),
        })
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }
}

/// Body-height error and per-leg vertical error `VE = PE + BE`.
pub fn vertical_error(
    kin: &BodyKinematics,
    grounded_feet: &[Vector3<f64>],
    body_origin: &Vector3<f64>,
) -> Result<(f64, Vec<f64>)> {
    let plane = GroundPlane::fit(grounded_feet)?;
    let be = plane.signed_distance(body_origin) - kin.desired_height;
    let [_, _, pe] = pose_errors(&kin.pose, &kin.shoulders);
    Ok((be, pe.into_iter().map(|p| p + be).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shoulders() -> Matrix3xX<f64> {
        Matrix3xX::from_columns(&[
            Vector3::new(0.2, 0.12, 0.0),
            Vector3::new(0.0, 0.12, 0.0),
            Vector3::new(-0.2, 0.12, 0.0),
            Vector3::new(0.2, -0.12, 0.0),
            Vector3::new(0.0, -0.12, 0.0),
            Vector3::new(-0.2, -0.12, 0.0),
        ])
    }

    fn kin(pose: Matrix3<f64>) -> BodyKinematics {
        BodyKinematics {
            shoulders: shoulders(),
            pose,
            desired_height: 0.15,
            leg: LegGeometry::default(),
        }
    }

    #[test]
    fn identity_pose_has_zero_vertical_row() {
        let [xe, ye, pe] = pose_errors(&Matrix3::identity(), &shoulders());
        assert!(pe.iter().all(|&v| v == 0.0));
        assert_eq!(xe[0], 0.2);
        assert_eq!(ye[3], -0.12);
    }

    #[test]
    fn roll_and_yaw() {
        let phi = 0.3;
        let roll = *Rotation3::from_axis_angle(&Vector3::x_axis(), phi).matrix();
        let sp = shoulders();
        let [_, _, pe] = pose_errors(&roll, &sp);
        for i in 0..6 {
            let expect = phi.sin() * sp[(1, i)] + phi.cos() * sp[(2, i)];
            assert!((pe[i] - expect).abs() < 1e-15);
        }
        let yaw = *Rotation3::from_axis_angle(&Vector3::z_axis(), 1.1).matrix();
        assert!(pose_errors(&yaw, &sp)[2].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pose_errors_linear_in_shoulders() {
        let t = *Rotation3::from_euler_angles(0.1, -0.2, 0.7).matrix();
        let a = shoulders();
        let b = shoulders() * 0.5 + Matrix3xX::from_element(6, 0.01);
        let sum = pose_errors(&t, &(&a * 2.0 + &b));
        let (pa, pb) = (pose_errors(&t, &a), pose_errors(&t, &b));
        for r in 0..3 {
            for i in 0..6 {
                assert!((sum[r][i] - (2.0 * pa[r][i] + pb[r][i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn level_body_at_height_has_zero_ve() {
        let feet = [
            Vector3::new(0.2, 0.3, 0.0),
            Vector3::new(-0.2, 0.3, 0.0),
            Vector3::new(0.0, -0.3, 0.0),
        ];
        let k = kin(Matrix3::identity());
        let (be, ve) = vertical_error(&k, &feet, &Vector3::new(0.0, 0.0, 0.15)).unwrap();
        assert!(be.abs() < 1e-15);
        assert!(ve.iter().all(|v| v.abs() < 1e-15));
        let (be, ve) = vertical_error(&k, &feet, &Vector3::new(0.0, 0.0, 0.2)).unwrap();
        assert!((be - 0.05).abs() < 1e-12);
        assert!(ve.iter().all(|v| (v - 0.05).abs() < 1e-12));
    }

    #[test]
    fn three_point_plane_matches_closed_form() {
        // Plane z = 0.5·x through the unit triangle.
        let feet = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.5),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let plane = GroundPlane::fit(&feet).unwrap();
        let n = (feet[1] - feet[0]).cross(&(feet[2] - feet[0])).normalize();
        assert!((plane.normal - n).norm() < 1e-12);
        let p = Vector3::new(0.0, 0.0, 1.0);
        assert!((plane.signed_distance(&p) - 1.0 / 1.25f64.sqrt()).abs() < 1e-12);

        let t = *Rotation3::from_axis_angle(&Vector3::y_axis(), -0.2).matrix();
        let (be, ve) = vertical_error(&kin(t), &feet, &p).unwrap();
        let [_, _, pe] = pose_errors(&t, &shoulders());
        for i in 0..6 {
            assert!((ve[i] - pe[i] - be).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_feet_rejected() {
        let line = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(GroundPlane::fit(&line), Err(Error::Estimation(_))));
        assert!(GroundPlane::fit(&line[..2]).is_err());
    }

    #[test]
    fn straight_leg_has_zero_distal_angle() {
        let g = LegGeometry::default();
        let full = g.coxa + g.femur + g.tibia;
        let ik = g.distal_ik(0.0, 0.0, full);
        assert!(ik.theta3.abs() < 1e-7 && !ik.clamped);
        assert!(g.distal_ik(0.0, 0.0, full + 0.1).clamped);
    }

    #[test]
    fn ik_round_trip() {
        let g = LegGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 200 {
            let x = rng.random_range(-0.4..0.4);
            let y = rng.random_range(-0.6..0.6);
            let target = rng.random_range(0.08..0.3);
            let ik = g.distal_ik(x, y, target);
            if ik.clamped {
                continue;
            }
            assert!((g.lateral_reach(x, y, ik.theta3) - target).abs() < 1e-9);
            // Mirrored axial angle gives the same distal angle.
            assert_eq!(g.distal_ik(-x, y, target).theta3, ik.theta3);
            checked += 1;
        }
    }

    #[test]
    fn default_stance_height() {
        let g = LegGeometry::default();
        let ik = g.distal_ik(0.0, 0.0, g.reach);
        let foot = g.foot(0.0, 0.0, ik.theta3);
        assert!((foot[1] - g.reach).abs() < 1e-12);
        assert!((-foot[2] - 0.15 * (1.0f64 - 0.04).sqrt()).abs() < 1e-12);
    }
}
