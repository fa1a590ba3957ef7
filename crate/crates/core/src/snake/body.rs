//! Planar snake body: forward kinematics, peg contacts and a quasi-static
//! propulsion model. Joint angles track their commands through a
//! first-order servo; the base moves so that drag on every link balances
//! the peg reaction forces.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::world::{point_segment_distance, PegWorld};

/// Planar pose of the head joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Drag per unit length along a link (N·s/m²).
    pub drag_tangential: f64,
    /// Drag per unit length across a link (N·s/m²).
    pub drag_normal: f64,
    /// Penalty stiffness of peg contacts (N/m).
    pub contact_stiffness: f64,
    pub max_contact_force: f64,
    pub servo_time_constant: f64,
    pub body_radius: f64,
    pub substeps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            drag_tangential: 1.0,
            drag_normal: 20.0,
            contact_stiffness: 200.0,
            max_contact_force: 20.0,
            servo_time_constant: 0.05,
            body_radius: 0.025,
            substeps: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnakeBody {
    pub base: Pose2,
    pub joint_angles: Vec<f64>,
    pub link_length: f64,
    /// External torque at every joint from peg contacts (N·m).
    pub external_torques: Vec<f64>,
}

/// A peg pressing on link `link` at backbone point `point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub link: usize,
    pub point: [f64; 2],
    /// Force applied to the body (N).
    pub force: [f64; 2],
}

fn cross(r: [f64; 2], f: [f64; 2]) -> f64 {
    r[0] * f[1] - r[1] * f[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

impl SnakeBody {
    pub fn new(base: Pose2, joint_angles: Vec<f64>, link_length: f64) -> Self {
        let n = joint_angles.len();
        Self {
            base,
            joint_angles,
            link_length,
            external_torques: vec![0.0; n],
        }
    }

    pub fn num_joints(&self) -> usize {
        self.joint_angles.len()
    }

    /// Heading of every link; link 0 is the head, link `N` the tail.
    pub fn link_headings(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_joints() + 1);
        let mut h = self.base.heading;
        out.push(h);
        for a in &self.joint_angles {
            h += a;
            out.push(h);
        }
        out
    }

    pub fn joint_positions(&self) -> Vec<[f64; 2]> {
        let headings = self.link_headings();
        let mut pos = Vec::with_capacity(self.num_joints());
        let mut p = [self.base.x, self.base.y];
        pos.push(p);
        for h in &headings[1..self.num_joints()] {
            p = [
                p[0] - self.link_length * h.cos(),
                p[1] - self.link_length * h.sin(),
            ];
            pos.push(p);
        }
        pos
    }

    /// Link segments `(headward end, tailward end)`.
    pub fn segments(&self) -> Vec<([f64; 2], [f64; 2])> {
        let headings = self.link_headings();
        let joints = self.joint_positions();
        let n = self.num_joints();
        let l = self.link_length;
        let mut segs = Vec::with_capacity(n + 1);
        let h0 = headings[0];
        segs.push(([joints[0][0] + l * h0.cos(), joints[0][1] + l * h0.sin()], joints[0]));
        for k in 1..n {
            segs.push((joints[k - 1], joints[k]));
        }
        let ht = headings[n];
        let last = joints[n - 1];
        segs.push((last, [last[0] - l * ht.cos(), last[1] - l * ht.sin()]));
        segs
    }

    /// Mean of the link midpoints.
    pub fn centroid(&self) -> [f64; 2] {
        let segs = self.segments();
        let n = segs.len() as f64;
        let (sx, sy) = segs.iter().fold((0.0, 0.0), |(x, y), (a, b)| {
            (x + 0.5 * (a[0] + b[0]), y + 0.5 * (a[1] + b[1]))
        });
        [sx / n, sy / n]
    }

    pub fn contacts(&self, world: &PegWorld, cfg: &DynamicsConfig) -> Vec<Contact> {
        let mut out = Vec::new();
        for (link, (a, b)) in self.segments().into_iter().enumerate() {
            for peg in &world.pegs {
                let reach = peg.radius + cfg.body_radius;
                let (d, q) = point_segment_distance(peg.center, a, b);
                if d >= reach || d == 0.0 {
                    continue;
                }
                let mag = (cfg.contact_stiffness * (reach - d)).min(cfg.max_contact_force);
                let normal = [(q[0] - peg.center[0]) / d, (q[1] - peg.center[1]) / d];
                out.push(Contact {
                    link,
                    point: q,
                    force: [mag * normal[0], mag * normal[1]],
                });
            }
        }
        out
    }

    /// Transposed point Jacobian of every contact. Returns the generalized
    /// force on the base `(f_x, f_y, τ about the head joint)` and the torque
    /// at each joint. A contact on link `k` loads joints `0..k`, the ones
    /// between the head and that link.
    pub fn generalized_forces(&self, contacts: &[Contact]) -> ([f64; 3], Vec<f64>) {
        let joints = self.joint_positions();
        let mut base = [0.0; 3];
        let mut torques = vec![0.0; self.num_joints()];
        for c in contacts {
            base[0] += c.force[0];
            base[1] += c.force[1];
            base[2] += cross(sub(c.point, joints[0]), c.force);
            for (j, tq) in torques.iter_mut().enumerate().take(c.link) {
                *tq += cross(sub(c.point, joints[j]), c.force);
            }
        }
        (base, torques)
    }
}

/// Velocity of `p` on link `link` induced by joint rates with the base held
/// fixed.
fn shape_velocity(p: [f64; 2], link: usize, joints: &[[f64; 2]], rates: &[f64]) -> [f64; 2] {
    let mut v = [0.0; 2];
    for j in 0..link.min(rates.len()) {
        let r = sub(p, joints[j]);
        v[0] -= rates[j] * r[1];
        v[1] += rates[j] * r[0];
    }
    v
}

// Two-point Gauss quadrature along each link.
const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Base twist `(v_x, v_y, ω)` balancing link drag against contact forces.
fn solve_base_twist(
    body: &SnakeBody,
    cfg: &DynamicsConfig,
    rates: &[f64],
    contacts: &[Contact],
) -> [f64; 3] {
    let joints = body.joint_positions();
    let origin = joints[0];
    let mut lhs = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let w = 0.5 * body.link_length;
    for (link, (a, b)) in body.segments().into_iter().enumerate() {
        let d = sub(b, a);
        let len = d[0].hypot(d[1]);
        let t = [d[0] / len, d[1] / len];
        let n = [-t[1], t[0]];
        // Drag tensor D = c_t t tᵀ + c_n n nᵀ.
        let dm = [
            [
                cfg.drag_tangential * t[0] * t[0] + cfg.drag_normal * n[0] * n[0],
                cfg.drag_tangential * t[0] * t[1] + cfg.drag_normal * n[0] * n[1],
            ],
            [
                cfg.drag_tangential * t[1] * t[0] + cfg.drag_normal * n[1] * n[0],
                cfg.drag_tangential * t[1] * t[1] + cfg.drag_normal * n[1] * n[1],
            ],
        ];
        for g in GAUSS {
            let p = [a[0] + g * d[0], a[1] + g * d[1]];
            let r = sub(p, origin);
            // Point velocity = G u + v_s with G = [[1, 0, -r_y], [0, 1, r_x]].
            let gm = [[1.0, 0.0, -r[1]], [0.0, 1.0, r[0]]];
            let vs = shape_velocity(p, link, &joints, rates);
            let dvs = [
                dm[0][0] * vs[0] + dm[0][1] * vs[1],
                dm[1][0] * vs[0] + dm[1][1] * vs[1],
            ];
            for i in 0..3 {
                for k in 0..3 {
                    let mut acc = 0.0;
                    for r1 in 0..2 {
                        for r2 in 0..2 {
                            acc += gm[r1][i] * dm[r1][r2] * gm[r2][k];
                        }
                    }
                    lhs[(i, k)] += w * acc;
                }
                rhs[i] -= w * (gm[0][i] * dvs[0] + gm[1][i] * dvs[1]);
            }
        }
    }
    let (wrench, _) = body.generalized_forces(contacts);
    rhs += Vector3::from(wrench);
    let u = lhs.lu().solve(&rhs).unwrap_or_else(Vector3::zeros);
    [u[0], u[1], u[2]]
}

/// Advances the body by `dt` toward `commanded` joint angles. Returns the
/// new body and the centroid displacement over the step.
pub fn step_dynamics(
    world: &PegWorld,
    body: &SnakeBody,
    commanded: &[f64],
    dt: f64,
    cfg: &DynamicsConfig,
) -> (SnakeBody, [f64; 2]) {
    let start = body.centroid();
    let mut b = body.clone();
    let substeps = cfg.substeps.max(1);
    let h = dt / substeps as f64;
    let tau = cfg.servo_time_constant;
    // Exact servo response; base pose advanced with the midpoint rule.
    let servo = |q: &[f64], t: f64| -> (Vec<f64>, Vec<f64>) {
        let decay = (-t / tau).exp();
        q.iter()
            .zip(commanded)
            .map(|(&q, &c)| (c + (q - c) * decay, -(q - c) * decay / tau))
            .unzip()
    };
    for _ in 0..substeps {
        let (_, rates0) = servo(&b.joint_angles, 0.0);
        let u0 = solve_base_twist(&b, cfg, &rates0, &b.contacts(world, cfg));
        let (half, rates_half) = servo(&b.joint_angles, 0.5 * h);
        let mut mid = b.clone();
        mid.base.x += 0.5 * h * u0[0];
        mid.base.y += 0.5 * h * u0[1];
        mid.base.heading += 0.5 * h * u0[2];
        mid.joint_angles = half;
        let u = solve_base_twist(&mid, cfg, &rates_half, &mid.contacts(world, cfg));
        b.base.x += h * u[0];
        b.base.y += h * u[1];
        b.base.heading += h * u[2];
        b.joint_angles = servo(&b.joint_angles, h).0;
    }
    let contacts = b.contacts(world, cfg);
    b.external_torques = b.generalized_forces(&contacts).1;
    let end = b.centroid();
    (b, [end[0] - start[0], end[1] - start[1]])
}
