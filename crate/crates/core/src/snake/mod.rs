//! Desk-scale planar snake in a peg array, exposing the per-window MDP used
//! to train the shape controller, the compliant baseline that generates
//! the replay database, and the gait-cycle evaluation.

mod body;
mod env;
mod eval;
pub(crate) mod mdp;
mod replay_db;
mod world;

pub use body::{step_dynamics, Contact, DynamicsConfig, Pose2, SnakeBody};
pub use env::{record_compliant_trial, run_compliant_trial, SnakeEnvConfig, SnakeSim, StartPose, StepOutcome};
pub use eval::{
    cycles_per_meter, evaluate_gait_cycles, evaluate_paired, CompliantMimic, GaitEvaluation,
    GaitTrial, PolicyController, SnakeController,
};
pub use mdp::{apply_actions, observe, shared_reward, Experience, SnakeAction, SnakeObservation};
pub use replay_db::{ReplayDatabase, ReplayHeader, RECORD_BYTES};
pub use world::{generate_world, point_segment_distance, Field, Peg, PegWorld, WorldConfig};
