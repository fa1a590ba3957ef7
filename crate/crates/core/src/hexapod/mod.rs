//! Legged robot standing on a tilted, carpeted board. Six leg agents shift
//! their shoulder offsets to level the body at the desired height.

mod env;
mod pose;
mod trace;

pub use env::{
    is_stabilized, nominal_drop, remove_legs, reset_episode, reset_with_offsets, step_hexapod,
    GaitMode, HexapodConfig, HexapodState, HexapodWorld, LegAction, LegObservation, ALL_LEGS,
    MID_LEGS,
};
pub use pose::{solve_rest_pose, RestPose};
pub use trace::{TraceLog, TraceRecord};
