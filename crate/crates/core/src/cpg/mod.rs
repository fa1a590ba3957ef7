//! Superellipse central pattern generators for the legged robot, the
//! distal-joint inverse kinematics, and the posture / height error terms
//! the leg agents observe.

mod kinematics;
mod oscillator;

pub use kinematics::{
    pose_errors, vertical_error, BodyKinematics, GroundPlane, IkSolution, LegGeometry,
};
pub use oscillator::{
    cpg_step, superellipse, superellipse_gradient, tripod_coupling, tripod_of, CpgConfig, CpgState,
    LEGS,
};
