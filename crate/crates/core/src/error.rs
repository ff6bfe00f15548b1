use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input in {path} at line {line}: {reason}")]
    MalformedInput {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("scene is empty")]
    EmptyScene,

    #[error("scatterer {index} sits at zero range from the array")]
    SingularGeometry { index: usize },

    #[error("signal power is zero, SNR is undefined")]
    UndefinedSnr,

    #[error("platform speed {speed} m/s is too {}: allowed interval is [{lower}, {upper}] m/s",
        if *.too_fast { "fast" } else { "slow" })]
    SpeedOutOfRange {
        speed: f64,
        lower: f64,
        upper: f64,
        too_fast: bool,
    },

    #[error("frame too short for the requested snapshots (max feasible N_ex: {max_feasible:?})")]
    FrameTooShort { max_feasible: Option<usize> },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("MUSIC needs fewer sources than channels: {sources} >= {channels}")]
    Rank { sources: usize, channels: usize },

    #[error("covariance is singular; add diagonal loading")]
    SingularCovariance,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
