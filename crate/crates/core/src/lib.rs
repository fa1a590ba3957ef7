//! Distributed actor-critic learning of decentralized controllers for
//! articulated robots: a sliding-window shape controller for a snake and a
//! CPG shoulder-offset stabilizer for a hexapod, each trained against a
//! deterministic desk-scale simulator.

pub mod a3c;
pub mod codec;
pub mod cpg;
pub mod error;
pub mod harness;
pub mod hexapod;
pub mod neural;
pub mod shape;

pub use error::{Error, Result};
pub mod snake;
