use std::path::PathBuf;

use thiserror::Error;

use crate::optim::DivergenceReport;

/// Errors raised by problems, samplers, diagnostics and optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("gradient bound l is unknown for this problem; use the exact full-gradient check")]
    UnknownGradientBound,

    #[error("dimension {d} exceeds the dense-matrix cap {cap}; use the HVP-based probes instead")]
    DenseCapExceeded { d: usize, cap: usize },

    #[error("η too large for C > 0 (bracketed denominator = {denominator:e})")]
    NonPositiveC { denominator: f64 },

    #[error("parameters outside the admissible box: {0}")]
    Inadmissible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("iterate diverged at epoch {}", .0.epoch)]
    Diverged(Box<DivergenceReport>),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("epoch {epoch}: {source}")]
    AtEpoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_epoch(self, epoch: usize) -> Self {
        match self {
            e @ (Error::AtEpoch { .. } | Error::Diverged(_)) => e,
            other => Error::AtEpoch {
                epoch,
                source: Box::new(other),
            },
        }
    }
}
