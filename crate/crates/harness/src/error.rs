use std::io;

use pann_core::PannError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training diverged in every trial")]
    AllDiverged,
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error(transparent)]
    Core(#[from] PannError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) | HarnessError::Io(_) => 2,
            HarnessError::AllDiverged => 3,
            HarnessError::ChecksFailed(_) => 4,
            HarnessError::Core(e) => match e {
                PannError::NonFinite => 3,
                PannError::Checkpoint(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
