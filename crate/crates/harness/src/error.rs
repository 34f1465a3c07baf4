use std::io;
use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: io::Error },

    #[error("run {run_id}: {source}")]
    Run { run_id: String, source: fedpg_core::Error },

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Setup(String),
}

impl HarnessError {
    /// Process exit status: 1 for configuration problems, 2 for everything
    /// that goes wrong once a valid configuration is running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::ConfigRead { .. } => 1,
            _ => 2,
        }
    }
}
