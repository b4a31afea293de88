use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty request: {0}")]
    EmptyRequest(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    /// Cholesky found a non-positive (or negligible) pivot.
    #[error("factorization failed at pivot {pivot}: matrix is not positive definite")]
    Factorization { pivot: usize },

    #[error("ill-conditioned Toeplitz system at order {order}")]
    Conditioning { order: usize },

    #[error("invalid specification: {0}")]
    Specification(String),

    #[error("under-determined system: {observations} observations for {parameters} parameters")]
    UnderDetermined { observations: usize, parameters: usize },

    #[error("collinear design matrix columns: {}", .columns.join(", "))]
    Collinearity { columns: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("objective returned a non-finite value at {0:?}")]
    Objective(Vec<f64>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("epochs not strictly increasing at line {line}")]
    Ordering { line: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
