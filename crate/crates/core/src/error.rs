use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the registration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not a rotation: orthogonality defect {orthogonality:.3e}, determinant {determinant}")]
    NotARotation { orthogonality: f64, determinant: f64 },

    #[error("matrix is not skew-symmetric: asymmetry defect {0:.3e}")]
    NotSkewSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("corruption level {0} outside [0, 1)")]
    InvalidLevel(f64),

    #[error("{what}: argument {value} outside domain")]
    Domain { what: &'static str, value: f64 },

    #[error("conv SO(d) membership test supports d <= 8, got d = {0}")]
    DimensionTooLarge(usize),

    #[error("point cloud is degenerate: all points coincide")]
    DegenerateCloud,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid experiment specification: {0}")]
    InvalidSpec(String),

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
