use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tenors must be strictly increasing (at position {position})")]
    NonMonotoneTenors { position: usize },

    #[error("discount bootstrap failed at the {tenor}y pillar: {reason}")]
    BootstrapFailure { tenor: f64, reason: String },

    #[error("negative implied hazard rate at the {tenor}y tenor")]
    NegativeHazard { tenor: f64 },

    #[error("hull-white calibration failed (best residual {residual:.3e}): {reason}")]
    CalibrationFailure { residual: f64, reason: String },

    #[error("swap maturity {maturity}y lies beyond the grid end {grid_end}y")]
    MaturityBeyondGrid { maturity: f64, grid_end: f64 },

    #[error("multiplier must be strictly positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("the dual minimizer sits on the alpha cap; no worst-case distribution is recoverable")]
    BoundarySolution,

    #[error("sample sets differ in size: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("{what} exceeds the enumeration cap ({cap})")]
    TooLarge { what: &'static str, cap: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("data error in {file}: {reason}")]
    Data { file: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
