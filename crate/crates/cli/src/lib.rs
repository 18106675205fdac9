//! Batch front end: config loading, the simulate-calibrate-solve pipeline and
//! the on-disk result bundle.

pub mod bundle;
pub mod config;
pub mod pipeline;

use robust_xva::Error;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Data { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::MaturityBeyondGrid { .. } => RunError::Data(e.to_string()),
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::NonMonotoneTenors { .. }
            | Error::NegativeHazard { .. }
            | Error::Empty(_)
            | Error::SizeMismatch { .. } => RunError::Data(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}
