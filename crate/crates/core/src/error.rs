use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the tensor, solver, and I/O layers.
#[derive(Debug, Error)]
pub enum MccaError {
    #[error("mode index {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("group {0} has no samples")]
    EmptyGroup(usize),

    #[error("dataset has no groups")]
    EmptyDataset,

    #[error("invalid ranks: {0}")]
    InvalidRanks(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("size {size} exceeds the configured cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("dataset has zero norm")]
    ZeroNorm,

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl MccaError {
    /// True for failures of the numerical routines rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, MccaError::NoConvergence { .. } | MccaError::NonFinite(_))
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        MccaError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MccaError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, MccaError>;
