use std::io;
use std::path::PathBuf;

use nmrb_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InputError = 1,
    NumericalFailure = 2,
    NotConverged = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("training stopped after {iterations} iterations without reaching the threshold {threshold:e} (best l1 residual {best_l1:e})")]
    NotConverged { iterations: usize, threshold: f64, best_l1: f64 },
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Parse { path: path.into(), message: message.to_string() }
    }

    pub fn exit_status(&self) -> ExitStatus {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Input(_) => ExitStatus::InputError,
            Self::Core(e) => match e {
                CoreError::NumericalFailure { .. }
                | CoreError::NonFinite { .. }
                | CoreError::Singular { .. }
                | CoreError::Contract { .. }
                | CoreError::Divergence { .. } => ExitStatus::NumericalFailure,
                _ => ExitStatus::InputError,
            },
            Self::NotConverged { .. } => ExitStatus::NotConverged,
            Self::SelfCheck(_) => ExitStatus::NumericalFailure,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
