//! Run configuration, commands and evaluation metrics.

mod commands;
mod config;
mod eval;

pub use commands::{
    build_database, compare, compare_with, eval_hexapod, eval_snake, evaluation_cases, evaluation_seeds,
    generate_db, sample_gains, train_hexapod, train_hexapod_with, train_snake, train_snake_from, CompareMetrics,
    DbStats, Metrics, MetricsReport, PairResult, TrainingSummary,
};
pub use config::{derive_seed, CompareConfig, DbConfig, HexapodEvalConfig, Paths, RunConfig};
pub use eval::{
    evaluate_hexapod, greedy_snake_controller, paired_t_test, HexapodEpisodeResult, HexapodEvaluation,
    HexapodPolicy,
};
