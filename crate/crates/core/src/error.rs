use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error in {field} at byte offset {offset}: {message}")]
    Format {
        field: &'static str,
        offset: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Codec { path: PathBuf, message: String },

    #[error("images have mixed dimensions: {}", .offenders.join(", "))]
    Heterogeneous { offenders: Vec<String> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    Convergence { sweeps: usize, off_norm: f64 },

    #[error("matrix is not positive definite: pivot {index} = {pivot:e}")]
    Singular { index: usize, pivot: f64 },

    #[error("degenerate batch: {0}")]
    Degenerate(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("batch {batch} failed during {stage}: {source}")]
    Stage {
        batch: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, batch: usize, stage: &'static str) -> Self {
        Error::Stage {
            batch,
            stage,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) => ErrorKind::Usage,
            Error::Format { .. }
            | Error::Codec { .. }
            | Error::Heterogeneous { .. }
            | Error::Io { .. } => ErrorKind::Data,
            Error::Convergence { .. }
            | Error::Singular { .. }
            | Error::Degenerate(_)
            | Error::NonFinite(_) => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
        }
    }
}
