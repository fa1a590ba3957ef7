use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("world generation failed: {0}")]
    WorldGeneration(String),

    #[error("ground plane estimation failed: {0}")]
    Estimation(String),

    #[error("environment fault: {0}")]
    EnvironmentFault(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("artifact missing: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
