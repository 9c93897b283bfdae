use thiserror::Error;

use crate::spectral::WaveVector;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("lattice mismatch: radius {left} vs {right}")]
    LatticeMismatch { left: u32, right: u32 },

    #[error("mode {0} lies outside the lattice")]
    ModeOutsideLattice(WaveVector),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {last_increment:.3e})")]
    NotConverged {
        iterations: usize,
        last_increment: f64,
        diagnostics: Box<crate::static_solver::SolveDiagnostics>,
    },

    #[error("time iteration did not converge after {iterations} iterations (H^1/2 criterion value {criterion:.3e})")]
    TimeNotConverged {
        iterations: usize,
        criterion: f64,
        increments: Vec<f64>,
    },

    #[error("singular operator (smallest singular value {smallest_singular_value:.3e})")]
    Singular { smallest_singular_value: f64 },

    #[error("quadrature tolerance not met (estimated error {error_estimate:.3e})")]
    Quadrature { value: f64, error_estimate: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sample {sample} (seed {seed}) failed: {source}")]
    Sample {
        sample: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
