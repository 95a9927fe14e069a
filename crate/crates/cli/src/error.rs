use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    /// Invalid invocation or missing inputs other than the scenario itself.
    #[error("{0}")]
    Input(String),

    #[error("physics error: {0}")]
    Physics(String),

    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// Acceptance comparison ran but at least one check failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 success, 1 physics or acceptance failure, 2 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Physics(_) | CliError::Io { .. } | CliError::Failed(_) => 1,
        }
    }
}
