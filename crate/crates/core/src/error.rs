use thiserror::Error;

use crate::covariance::CovarianceMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not Toeplitz (max diagonal deviation {0:.3e})")]
    NotToeplitz(f64),

    /// The projection hit its iteration cap. The best iterate is still
    /// returned so callers can decide whether it is good enough.
    #[error("Toeplitz-PSD projection did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        residual: f64,
        iterations: usize,
        result: Box<CovarianceMatrix>,
    },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    DivergedLoss { epoch: usize, loss: f64 },

    #[error("missing model: {0}")]
    MissingModel(String),

    #[error("malformed data: {0}")]
    MalformedData(String),

    #[error("unsupported dataset format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// I/O error annotated with the path it concerns.
    pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// Process exit code for the `r2c` binary: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_)
            | Error::InvalidConfig(_)
            | Error::NotToeplitz(_)
            | Error::MissingModel(_)
            | Error::FormatVersion { .. }
            | Error::Json(_) => 2,
            Error::NonConvergence { .. } | Error::DivergedLoss { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::MalformedData(_) => 4,
        }
    }
}
