use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3xX, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pose::{solve_rest_pose, RestPose};
use crate::cpg::{cpg_step, pose_errors, vertical_error, BodyKinematics, CpgConfig, CpgState, LegGeometry, LEGS};
use crate::error::{contract, Error, Result};

/// Legs are ordered LF, LM, LR, RF, RM, RR.
pub const MID_LEGS: [usize; 2] = [1, 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HexapodConfig {
    pub cpg: CpgConfig,
    pub leg: LegGeometry,
    /// Shoulder positions in the body frame.
    pub shoulders: [[f64; 3]; LEGS],
    pub desired_height: f64,
    pub slope: f64,
    /// Constant reward `r₀` paid every step.
    pub reward_offset: f64,
    pub dt: f64,
    pub max_steps: usize,
    /// Offset rate magnitude used while training.
    pub train_action: f64,
    /// Offset rate magnitude used at execution.
    pub exec_action: f64,
    pub offset_limit: f64,
    /// Initial offsets are drawn from `[-init_offset, init_offset]`.
    pub init_offset: f64,
    pub pose_tol: f64,
    pub height_tol: f64,
    pub contact_eps: f64,
    pub body_mass: f64,
    pub gravity: f64,
    /// Heading change between successive episodes.
    pub yaw_step: f64,
}

impl Default for HexapodConfig {
    fn default() -> Self {
        let leg = LegGeometry::default();
        Self {
            cpg: CpgConfig::default(),
            leg,
            shoulders: [
                [0.2, 0.12, 0.0],
                [0.0, 0.12, 0.0],
                [-0.2, 0.12, 0.0],
                [0.2, -0.12, 0.0],
                [0.0, -0.12, 0.0],
                [-0.2, -0.12, 0.0],
            ],
            desired_height: nominal_drop(&leg),
            slope: 0.1,
            reward_offset: -0.02,
            dt: 0.02,
            max_steps: 250,
            train_action: 1.0,
            exec_action: 0.3,
            offset_limit: 0.8,
            init_offset: 0.4,
            pose_tol: 0.01,
            height_tol: 0.01,
            contact_eps: 1e-4,
            body_mass: 2.0,
            gravity: 9.81,
            yaw_step: PI / 4.0,
        }
    }
}

/// Foot drop below the shoulder with both proximal angles at zero.
pub fn nominal_drop(leg: &LegGeometry) -> f64 {
    let ik = leg.distal_ik(0.0, 0.0, leg.reach);
    -leg.foot(0.0, 0.0, ik.theta3)[2]
}

impl HexapodConfig {
    pub fn validate(&self) -> Result<()> {
        self.cpg.validate()?;
        let ok = self.dt > 0.0
            && (0.0..=PI / 6.0).contains(&self.slope)
            && self.max_steps > 0
            && self.offset_limit > 0.0
            && self.init_offset >= 0.0
            && self.init_offset <= self.offset_limit
            && self.pose_tol > 0.0
            && self.height_tol > 0.0
            && self.contact_eps > 0.0
            && self.desired_height > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid hexapod configuration".into()))
        }
    }

    pub fn shoulder_matrix(&self, live: &[bool; LEGS]) -> Matrix3xX<f64> {
        let cols: Vec<Vector3<f64>> = (0..LEGS)
            .map(|i| {
                if live[i] {
                    Vector3::from(self.shoulders[i])
                } else {
                    Vector3::zeros()
                }
            })
            .collect();
        Matrix3xX::from_columns(&cols)
    }
}

/// Inclined board the robot stands on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexapodWorld {
    pub slope: f64,
    /// The carpet grips every grounded foot.
    pub friction: bool,
    pub yaw: f64,
    pub seed: u64,
}

impl HexapodWorld {
    /// World frame of the board surface including the robot's heading.
    pub fn board_frame(&self) -> Matrix3<f64> {
        let tilt = Rotation3::from_axis_angle(&Vector3::y_axis(), self.slope);
        let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw);
        *(tilt * yaw).matrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitMode {
    Standing,
    Walking,
}

/// Offset rate command of one leg agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LegAction {
    Lower,
    Hold,
    Raise,
}

impl LegAction {
    pub const COUNT: usize = 3;
    pub const ALL: [LegAction; 3] = [LegAction::Lower, LegAction::Hold, LegAction::Raise];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| contract(format!("leg action {i} out of range")))
    }

    pub fn rate(self, magnitude: f64) -> f64 {
        match self {
            LegAction::Lower => -magnitude,
            LegAction::Hold => 0.0,
            LegAction::Raise => magnitude,
        }
    }
}

/// `⟨θ₁, θ₂, θ₃, VE, τ₁, τ₂, τ₃⟩` for one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegObservation(pub [f64; 7]);

impl LegObservation {
    pub const LEN: usize = 7;
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexapodState {
    pub world: HexapodWorld,
    pub episode: u64,
    pub step: usize,
    pub cpg: CpgState,
    /// `(θ₁, θ₂, θ₃)` per leg.
    pub joint_angles: [[f64; 3]; LEGS],
    pub joint_torques: [[f64; 3]; LEGS],
    pub contacts: [bool; LEGS],
    pub pose: Matrix3<f64>,
    pub height: f64,
    pub live: [bool; LEGS],
    pub posture_error: [f64; LEGS],
    pub height_error: f64,
    pub vertical_error: [f64; LEGS],
}

impl HexapodState {
    pub fn live_legs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..LEGS).filter(|&i| self.live[i])
    }

    pub fn observation(&self, leg: usize) -> LegObservation {
        let [t1, t2, t3] = self.joint_angles[leg];
        let [q1, q2, q3] = self.joint_torques[leg];
        LegObservation([t1, t2, t3, self.vertical_error[leg], q1, q2, q3])
    }

    pub fn observations(&self) -> [LegObservation; LEGS] {
        std::array::from_fn(|i| self.observation(i))
    }

    pub fn offsets(&self) -> [f64; LEGS] {
        self.cpg.offsets
    }

    pub fn grounded_count(&self) -> usize {
        self.live_legs().filter(|&i| self.contacts[i]).count()
    }
}

fn side(leg: usize) -> f64 {
    if leg < 3 {
        1.0
    } else {
        -1.0
    }
}

/// Foot positions, joint angles and the foot-position Jacobian of each leg
/// in the body frame.
fn leg_geometry(cfg: &HexapodConfig, x: f64, y: f64, leg: usize) -> ([f64; 3], Vector3<f64>, Matrix3<f64>) {
    let g = &cfg.leg;
    let t3 = g.distal_ik(x, y, g.reach).theta3;
    let s = side(leg);
    let psi = y - t3;
    let r = g.coxa + g.femur * y.cos() + g.tibia * psi.cos();
    let sh = Vector3::from(cfg.shoulders[leg]);
    let foot = sh + Vector3::new(r * x.sin(), s * r * x.cos(), g.femur * y.sin() + g.tibia * psi.sin());
    let dr_dy = -g.femur * y.sin() - g.tibia * psi.sin();
    let dz_dy = g.femur * y.cos() + g.tibia * psi.cos();
    let dr_dt3 = g.tibia * psi.sin();
    let dz_dt3 = -g.tibia * psi.cos();
    let jac = Matrix3::from_columns(&[
        Vector3::new(r * x.cos(), -s * r * x.sin(), 0.0),
        Vector3::new(dr_dy * x.sin(), s * dr_dy * x.cos(), dz_dy),
        Vector3::new(dr_dt3 * x.sin(), s * dr_dt3 * x.cos(), dz_dt3),
    ]);
    ([x, y, t3], foot, jac)
}

/// Places the body for the current oscillator state and fills every
/// derived quantity.
fn settle(
    cfg: &HexapodConfig,
    world: HexapodWorld,
    episode: u64,
    step: usize,
    cpg: CpgState,
    mode: GaitMode,
    live: [bool; LEGS],
) -> Result<HexapodState> {
    let mut angles = [[0.0; 3]; LEGS];
    let mut feet = [None; LEGS];
    let mut jacs = [Matrix3::zeros(); LEGS];
    for i in 0..LEGS {
        let (x, y) = match mode {
            GaitMode::Standing => (cfg.cpg.center_x[i], cpg.offsets[i]),
            GaitMode::Walking => (cpg.x[i], cpg.y[i]),
        };
        let (a, foot, jac) = leg_geometry(cfg, x, y, i);
        angles[i] = a;
        jacs[i] = jac;
        if live[i] {
            feet[i] = Some(foot);
        }
    }
    let rest: RestPose = solve_rest_pose(&feet, &world.board_frame(), cfg.contact_eps)?;
    let weight = cfg.body_mass * cfg.gravity;
    let up_body = rest.rotation.transpose() * Vector3::new(0.0, 0.0, weight);
    let mut torques = [[0.0; 3]; LEGS];
    for i in 0..LEGS {
        if rest.contacts[i] {
            let tau = jacs[i].transpose() * (up_body * rest.weights[i]);
            torques[i] = [tau.x, tau.y, tau.z];
        }
    }
    let kin = BodyKinematics {
        shoulders: cfg.shoulder_matrix(&live),
        pose: rest.rotation,
        desired_height: cfg.desired_height,
        leg: cfg.leg,
    };
    let grounded: Vec<Vector3<f64>> = (0..LEGS)
        .filter(|&i| rest.contacts[i])
        .map(|i| rest.feet_world[i])
        .collect();
    let (be, ve) = vertical_error(&kin, &grounded, &rest.origin_world)?;
    let [_, _, pe] = pose_errors(&rest.rotation, &kin.shoulders);
    let mut vertical = [0.0; LEGS];
    let mut posture = [0.0; LEGS];
    for i in 0..LEGS {
        if live[i] {
            vertical[i] = ve[i];
            posture[i] = pe[i];
        }
    }
    Ok(HexapodState {
        world,
        episode,
        step,
        cpg,
        joint_angles: angles,
        joint_torques: torques,
        contacts: rest.contacts,
        pose: rest.rotation,
        height: rest.height,
        live,
        posture_error: posture,
        height_error: be,
        vertical_error: vertical,
    })
}

/// Starts episode `episode` on the board: heading `episode·yaw_step`,
/// shoulder offsets uniform in `±init_offset`, redrawn until the body has a
/// stable support.
pub fn reset_episode(cfg: &HexapodConfig, seed: u64, episode: u64, live: [bool; LEGS]) -> Result<HexapodState> {
    cfg.validate()?;
    let world = HexapodWorld {
        slope: cfg.slope,
        friction: true,
        yaw: (episode as f64 * cfg.yaw_step).rem_euclid(2.0 * PI),
        seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    for _ in 0..1000 {
        let mut cpg = CpgState::at_rest(&cfg.cpg);
        for i in 0..LEGS {
            cpg.offsets[i] = if cfg.init_offset > 0.0 {
                rng.random_range(-cfg.init_offset..=cfg.init_offset)
            } else {
                0.0
            };
            cpg.y[i] = cpg.offsets[i];
        }
        if let Ok(state) = settle(cfg, world, episode, 0, cpg, GaitMode::Standing, live) {
            if state.grounded_count() >= 3 {
                return Ok(state);
            }
        }
    }
    Err(Error::EnvironmentFault("no stable initial pose found".into()))
}

/// Resets with the given offsets instead of random ones.
pub fn reset_with_offsets(
    cfg: &HexapodConfig,
    world: HexapodWorld,
    offsets: [f64; LEGS],
    live: [bool; LEGS],
) -> Result<HexapodState> {
    let mut cpg = CpgState::at_rest(&cfg.cpg);
    cpg.offsets = offsets;
    cpg.y = offsets;
    settle(cfg, world, 0, 0, cpg, GaitMode::Standing, live)
}

/// Applies one offset increment per leg, re-solves the pose and returns the
/// contact-gated rewards `r₀ − δᵢ·(|VEᵢ(t)| − |VEᵢ(t−dt)|)/dt`.
pub fn step_hexapod(
    cfg: &HexapodConfig,
    state: &HexapodState,
    actions: &[LegAction; LEGS],
    magnitude: f64,
    mode: GaitMode,
) -> Result<(HexapodState, [f64; LEGS])> {
    let mut cpg = state.cpg;
    for i in 0..LEGS {
        if state.live[i] {
            cpg.offsets[i] = (cpg.offsets[i] + actions[i].rate(magnitude) * cfg.dt)
                .clamp(-cfg.offset_limit, cfg.offset_limit);
        }
    }
    match mode {
        GaitMode::Standing => cpg.y = cpg.offsets,
        GaitMode::Walking => cpg = cpg_step(&cfg.cpg, &cpg, cfg.dt),
    }
    let next = settle(cfg, state.world, state.episode, state.step + 1, cpg, mode, state.live)?;
    let mut rewards = [cfg.reward_offset; LEGS];
    for i in 0..LEGS {
        if next.live[i] && next.contacts[i] {
            let change = next.vertical_error[i].abs() - state.vertical_error[i].abs();
            rewards[i] = cfg.reward_offset - change / cfg.dt;
        }
    }
    Ok((next, rewards))
}

/// Strict thresholds on the largest posture error and the height error.
pub fn is_stabilized(state: &HexapodState, pose_tol: f64, height_tol: f64) -> bool {
    let worst = state
        .live_legs()
        .map(|i| state.posture_error[i].abs())
        .fold(0.0, f64::max);
    worst < pose_tol && state.height_error.abs() < height_tol
}

/// Drops legs from the body, keeping the oscillator parameters, and
/// re-solves the pose. The remaining legs must be four, one per corner.
pub fn remove_legs(cfg: &HexapodConfig, state: &HexapodState, legs: &[usize]) -> Result<HexapodState> {
    if legs.is_empty() {
        return Ok(state.clone());
    }
    let mut live = state.live;
    for &l in legs {
        if l >= LEGS {
            return Err(contract(format!("leg {l} out of range")));
        }
        live[l] = false;
    }
    let left = live.iter().filter(|&&v| v).count();
    let corners = [0usize, 2, 3, 5].iter().all(|&i| live[i]);
    if left != 4 || !corners {
        return Err(contract(format!(
            "leg removal must leave the four corner legs, {left} legs would remain"
        )));
    }
    let mut next = settle(cfg, state.world, state.episode, state.step, state.cpg, GaitMode::Standing, live)?;
    for i in 0..LEGS {
        if !live[i] {
            next.joint_torques[i] = [0.0; 3];
        }
    }
    Ok(next)
}

pub const ALL_LEGS: [bool; LEGS] = [true; LEGS];

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> HexapodConfig {
        HexapodConfig {
            slope: 0.0,
            ..HexapodConfig::default()
        }
    }

    fn world(slope: f64) -> HexapodWorld {
        HexapodWorld {
            slope,
            friction: true,
            yaw: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn zero_offsets_on_flat_board_are_level() {
        let cfg = flat();
        let s = reset_with_offsets(&cfg, world(0.0), [0.0; LEGS], ALL_LEGS).unwrap();
        assert_eq!(s.contacts, [true; LEGS]);
        assert!(s.height_error.abs() < 1e-12);
        assert!(s.posture_error.iter().all(|p| p.abs() < 1e-12));
        assert!(is_stabilized(&s, cfg.pose_tol, cfg.height_tol));
        let total: f64 = (0..LEGS).map(|i| s.joint_torques[i][1]).sum();
        assert!(total.is_finite());
    }

    #[test]
    fn yaw_cycles_every_eight_episodes() {
        let cfg = HexapodConfig::default();
        let a = reset_episode(&cfg, 3, 2, ALL_LEGS).unwrap();
        let b = reset_episode(&cfg, 3, 10, ALL_LEGS).unwrap();
        assert!((a.world.yaw - b.world.yaw).abs() < 1e-12);
        let again = reset_episode(&cfg, 3, 2, ALL_LEGS).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn resets_always_grounded() {
        let cfg = HexapodConfig::default();
        for ep in 0..1000 {
            let s = reset_episode(&cfg, 17, ep, ALL_LEGS).unwrap();
            assert!(s.grounded_count() >= 3);
            for i in 0..LEGS {
                assert!(s.cpg.offsets[i].abs() <= cfg.init_offset);
            }
        }
    }

    #[test]
    fn idle_static_pose_pays_offset() {
        let cfg = HexapodConfig::default();
        let s = reset_episode(&cfg, 1, 0, ALL_LEGS).unwrap();
        let (next, r) = step_hexapod(&cfg, &s, &[LegAction::Hold; LEGS], 1.0, GaitMode::Standing).unwrap();
        assert_eq!(r, [cfg.reward_offset; LEGS]);
        assert_eq!(next.vertical_error, s.vertical_error);
    }

    #[test]
    fn airborne_legs_get_exactly_offset() {
        let cfg = HexapodConfig::default();
        for ep in 0..50 {
            let mut s = reset_episode(&cfg, 5, ep, ALL_LEGS).unwrap();
            for k in 0..20 {
                let acts: [LegAction; LEGS] = std::array::from_fn(|i| LegAction::ALL[(i + k + ep as usize) % 3]);
                let (n, r) = step_hexapod(&cfg, &s, &acts, 1.0, GaitMode::Standing).unwrap();
                for i in 0..LEGS {
                    if !n.contacts[i] {
                        assert_eq!(r[i], cfg.reward_offset);
                    }
                }
                s = n;
            }
        }
    }

    #[test]
    fn reward_arithmetic() {
        let cfg = HexapodConfig::default();
        // |VE| shrinking by 1 mm over one step.
        let change = -0.001;
        assert!((cfg.reward_offset - change / cfg.dt - 0.03).abs() < 1e-12);
    }

    #[test]
    fn body_rotation_is_proper() {
        let cfg = HexapodConfig::default();
        let s = reset_episode(&cfg, 2, 3, ALL_LEGS).unwrap();
        assert!(s.height > 0.0);
        let r = s.pose;
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stabilization_threshold_is_strict() {
        let cfg = flat();
        let mut s = reset_with_offsets(&cfg, world(0.0), [0.0; LEGS], ALL_LEGS).unwrap();
        s.posture_error[0] = cfg.pose_tol;
        assert!(!is_stabilized(&s, cfg.pose_tol, cfg.height_tol));
        s.posture_error[0] = 0.0;
        s.height_error = 2.0 * cfg.height_tol;
        assert!(!is_stabilized(&s, cfg.pose_tol, cfg.height_tol));
    }

    #[test]
    fn leg_removal_rules() {
        let cfg = HexapodConfig::default();
        let s = reset_with_offsets(&cfg, world(0.1), [0.0; LEGS], ALL_LEGS).unwrap();
        assert_eq!(remove_legs(&cfg, &s, &[]).unwrap(), s);
        let q = remove_legs(&cfg, &s, &MID_LEGS).unwrap();
        assert_eq!(q.live, [true, false, true, true, false, true]);
        assert!(!q.contacts[1] && !q.contacts[4]);
        assert_eq!(q.vertical_error[1], 0.0);
        assert!(remove_legs(&cfg, &s, &[0, 1, 2]).is_err());
        assert!(remove_legs(&cfg, &s, &[0, 3]).is_err());
    }

    #[test]
    fn torque_matches_finite_difference_work() {
        // Jacobian columns agree with finite differences of the foot position.
        let cfg = HexapodConfig::default();
        for leg in [0, 4] {
            let (x, y) = (0.13, -0.21);
            let (a, _, jac) = leg_geometry(&cfg, x, y, leg);
            let g = &cfg.leg;
            let s = side(leg);
            let foot = |x: f64, y: f64, t3: f64| {
                let f = g.foot(x, y, t3);
                Vector3::new(f[0], s * f[1], f[2])
            };
            let h = 1e-6;
            let q = a;
            for k in 0..3 {
                let mut hi = q;
                let mut lo = q;
                hi[k] += h;
                lo[k] -= h;
                let fd = (foot(hi[0], hi[1], hi[2]) - foot(lo[0], lo[1], lo[2])) / (2.0 * h);
                assert!((fd - jac.column(k)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn slope_gives_tilted_start() {
        let cfg = HexapodConfig::default();
        let s = reset_with_offsets(&cfg, world(0.1), [0.0; LEGS], ALL_LEGS).unwrap();
        assert!(!is_stabilized(&s, cfg.pose_tol, cfg.height_tol));
        assert!(s.height_error.abs() < 1e-9);
    }
}
