//! Asynchronous advantage actor-critic training over a shared parameter store.

mod offline;
mod online;
mod pool;
mod report;
mod store;

pub use offline::{train_snake_offline, EpisodeSlice, OfflineDatabase, SnakeTrainConfig};
pub use online::{
    centralized_reward, decode_joint_action, encode_joint_action, train_hexapod_centralized, train_hexapod_online,
    AgentEpisode, HexapodTrainConfig, SmoothStop, StepEvent, CENTRALIZED_ACTIONS,
};
pub use pool::ReplayPool;
pub use report::{EpisodeRecord, ReportLine, TrainingReport, UpdateRecord};
pub use store::{params_checksum, GlobalStore, GradientBatch, PushReceipt, Snapshot, StoreStats};
