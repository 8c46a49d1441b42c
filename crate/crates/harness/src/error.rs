use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad experiment configuration, located in its source text.
    #[error("{file}:{line}:{column}: {message}")]
    Config { file: String, line: usize, column: usize, message: String },

    /// Bad configuration with no source position (presets, CLI overrides).
    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] explore_core::Error),

    /// Some episodes failed; everything else was still written.
    #[error("{failed} of {total} episodes failed")]
    EpisodesFailed { failed: usize, total: usize },

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Invalid(_) => 2,
            HarnessError::Core(explore_core::Error::Config(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
