use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};

use crate::cpg::LEGS;
use crate::error::{Error, Result};

/// Resting placement of a rigid body on an inclined plane with pinned feet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestPose {
    /// Body orientation in the world frame.
    pub rotation: Matrix3<f64>,
    /// Body origin height above the board along the board normal.
    pub height: f64,
    pub contacts: [bool; LEGS],
    /// Share of the body weight carried by each foot.
    pub weights: [f64; LEGS],
    /// Feet in the world frame (board passes through the world origin).
    pub feet_world: [Vector3<f64>; LEGS],
    pub origin_world: Vector3<f64>,
}

fn barycentric(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> Option<[f64; 3]> {
    let (v0, v1, v2) = (b - a, c - a, p - a);
    let den = v0.x * v1.y - v1.x * v0.y;
    if den.abs() < 1e-14 {
        return None;
    }
    let v = (v2.x * v1.y - v1.x * v2.y) / den;
    let w = (v0.x * v2.y - v2.x * v0.y) / den;
    Some([1.0 - v - w, v, w])
}

/// Finds the lower-hull facet of the feet that the body comes to rest on.
///
/// `board` maps the board-local frame (z along the board normal) into the
/// world frame and already includes the robot's yaw on the board. For each
/// triple of feet whose plane has every other foot on the body side, the
/// body is rotated so that plane lies on the board; the facet is accepted if
/// the vertical projection of the body origin falls inside its triangle.
pub fn solve_rest_pose(
    feet_body: &[Option<Vector3<f64>>; LEGS],
    board: &Matrix3<f64>,
    contact_eps: f64,
) -> Result<RestPose> {
    let live: Vec<usize> = (0..LEGS).filter(|&i| feet_body[i].is_some()).collect();
    if live.len() < 3 {
        return Err(Error::EnvironmentFault("fewer than 3 legs".into()));
    }
    let foot = |i: usize| feet_body[i].expect("live leg");
    let down_local = board.transpose() * Vector3::new(0.0, 0.0, -1.0);

    let mut best: Option<(f64, Matrix3<f64>, f64)> = None;
    for (ai, &a) in live.iter().enumerate() {
        for (bi, &b) in live.iter().enumerate().skip(ai + 1) {
            for &c in live.iter().skip(bi + 1) {
                let (pa, pb, pc) = (foot(a), foot(b), foot(c));
                let cross = (pb - pa).cross(&(pc - pa));
                if cross.norm() < 1e-12 {
                    continue;
                }
                let mut n = cross.normalize();
                // Orient the normal from the facet toward the body origin.
                let d0 = -n.dot(&pa);
                let d0 = if d0 < 0.0 {
                    n = -n;
                    -d0
                } else {
                    d0
                };
                if d0 <= 0.0 {
                    continue;
                }
                let lower = live
                    .iter()
                    .all(|&k| n.dot(&(foot(k) - pa)) >= -contact_eps);
                if !lower {
                    continue;
                }
                let align = Rotation3::rotation_between(&n, &Vector3::z())
                    .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), std::f64::consts::PI));
                let align = *align.matrix();
                let origin = Vector3::new(0.0, 0.0, d0);
                let t = d0 / -down_local.z;
                let hit = origin + t * down_local;
                let q = |p: Vector3<f64>| {
                    let v = align * p + origin;
                    Vector2::new(v.x, v.y)
                };
                if let Some(w) = barycentric(Vector2::new(hit.x, hit.y), q(pa), q(pb), q(pc)) {
                    let score = w[0].min(w[1]).min(w[2]);
                    if best.as_ref().is_none_or(|(s, _, _)| score > *s + 1e-12) {
                        best = Some((score, align, d0));
                    }
                }
            }
        }
    }
    let (score, align, height) =
        best.ok_or_else(|| Error::EnvironmentFault("no supporting facet".into()))?;
    if score < -1e-9 {
        return Err(Error::EnvironmentFault("body tips over its support".into()));
    }

    let origin = Vector3::new(0.0, 0.0, height);
    let mut contacts = [false; LEGS];
    let mut local = [Vector3::zeros(); LEGS];
    for &i in &live {
        local[i] = align * foot(i) + origin;
        contacts[i] = local[i].z.abs() <= contact_eps;
    }
    let grounded: Vec<usize> = live.iter().copied().filter(|&i| contacts[i]).collect();
    if grounded.len() < 3 {
        return Err(Error::EnvironmentFault("support lost".into()));
    }
    let t = height / -down_local.z;
    let hit = origin + t * down_local;
    let weights = load_shares(&grounded, &local, Vector2::new(hit.x, hit.y));

    let rotation = board * align;
    let mut feet_world = [Vector3::zeros(); LEGS];
    for &i in &live {
        feet_world[i] = board * local[i];
    }
    Ok(RestPose {
        rotation,
        height,
        contacts,
        weights,
        feet_world,
        origin_world: board * origin,
    })
}

/// Minimum-norm weights reproducing the support point from the grounded
/// feet, with negative shares clipped and the rest renormalized.
fn load_shares(grounded: &[usize], local: &[Vector3<f64>; LEGS], p: Vector2<f64>) -> [f64; LEGS] {
    let k = grounded.len();
    let a = nalgebra::DMatrix::from_fn(3, k, |r, c| match r {
        0 => 1.0,
        1 => local[grounded[c]].x,
        _ => local[grounded[c]].y,
    });
    let b = nalgebra::DVector::from_vec(vec![1.0, p.x, p.y]);
    let gram = &a * a.transpose();
    let mut out = [0.0; LEGS];
    let w = gram
        .lu()
        .solve(&b)
        .map(|y| a.transpose() * y)
        .unwrap_or_else(|| nalgebra::DVector::from_element(k, 1.0 / k as f64));
    let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
    for (j, &leg) in grounded.iter().enumerate() {
        out[leg] = if total > 0.0 { w[j].max(0.0) / total } else { 1.0 / k as f64 };
    }
    out
}
