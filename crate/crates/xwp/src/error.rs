//! Crate-wide error and result types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, CLI usage, or model specification.
    #[error("config: {0}")]
    Config(String),
    /// Shape mismatch between arrays, layers, or datasets.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),
    /// Dataset files that are missing, malformed, or fail validation.
    #[error("data: {0}")]
    Data(String),
    /// Checkpoint bytes that cannot be parsed back into a model pair.
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    /// Downloaded artifact whose digest does not match the manifest.
    #[error("checksum mismatch for {name}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        name: String,
        expected: String,
        actual: String,
    },
    /// Attribution method name that is not recognized.
    #[error("unknown method: {0:?} (expected one of xwp, xwp_c, occlusion, shapley, rise, ig, lrp)")]
    UnknownMethod(String),
    /// Trained model that ended below the configured accuracy floor.
    #[error("test accuracy {achieved:.4} is below the required floor {floor:.4}")]
    AccuracyFloor { achieved: f64, floor: f64 },
    /// Target-class confidence of exactly zero, which cannot be normalized.
    #[error("target confidence is exactly zero for sample {0}")]
    ZeroConfidence(usize),
    /// Download failure that is not a checksum mismatch.
    #[error("fetch: {0}")]
    Fetch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for usage and configuration errors,
    /// 2 for missing or corrupt data, 3 for an accuracy floor violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AccuracyFloor { .. } => 3,
            Error::Data(_)
            | Error::Checkpoint(_)
            | Error::ChecksumMismatch { .. }
            | Error::ZeroConfidence(_)
            | Error::Fetch(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
            _ => 1,
        }
    }
}
