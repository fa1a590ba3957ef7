//! Dense, recurrent and optimizer building blocks with hand-written
//! backpropagation, over flat `f64` parameter vectors.

mod adam;
mod arch;
mod checkpoint;
mod feedforward;
mod layout;
mod losses;
pub mod ops;
mod recurrent;
mod select;

pub use adam::{adam_step, AdamConfig, AdamReport, AdamState};
pub use arch::{Architecture, FeedforwardSpec, RecurrentSpec, Weights};
pub use checkpoint::Checkpoint;
pub use feedforward::{FeedforwardNet, FeedforwardOutput, LossStats};
pub use layout::{Block, Layout};
pub use losses::{bce_with_logit, discounted_returns, policy_loss, value_loss, PROB_FLOOR};
pub use recurrent::{LossWeights, LstmState, RecurrentNet, RecurrentOutput, SequenceTargets};
pub use select::{argmax, boltzmann_select};
