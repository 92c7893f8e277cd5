use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("power must be positive to express in dBm, got {0} W")]
    NonPositivePower(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("frequency grid too coarse: step {step_hz} Hz exceeds linewidth/4 = {limit_hz} Hz")]
    GridTooCoarse { step_hz: f64, limit_hz: f64 },

    #[error("frequency grid must be strictly increasing and cover every channel")]
    InvalidGrid,

    #[error("comb offset {offset_db} dB for channel {channel} outside [-2, 0]")]
    CombOffsetOutOfRange { channel: usize, offset_db: f64 },

    #[error("IDX file {path}: {reason}")]
    Idx { path: PathBuf, reason: String },

    #[error("PCA: {0}")]
    Pca(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
