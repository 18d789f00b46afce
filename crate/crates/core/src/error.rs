use thiserror::Error;

use crate::sdp::{Residuals, SolveStatus};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial state is separable; entanglement events are undefined")]
    SeparableInitialState,

    #[error("SDP solver stopped with status {status:?} after {iterations} iterations ({residuals})")]
    Solver {
        status: SolveStatus,
        iterations: usize,
        residuals: Residuals,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
