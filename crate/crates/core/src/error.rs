use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tensor, decomposition, measurement and recovery layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("multi-index {index:?} out of range for shape {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rank tuple: {0}")]
    InvalidRank(String),

    /// A fixed-rank manifold routine was called at a rank-deficient point.
    #[error("singular point: bond {bond} has numerical rank {actual}, nominal rank is {nominal}")]
    SingularPoint {
        bond: usize,
        actual: usize,
        nominal: usize,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
