use thiserror::Error;

use crate::quadrature::QuadResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The adaptive integrator ran out of subdivisions; `best` is the estimate it had.
    #[error("accuracy not reached after {subdivisions} subdivisions (value {}, error estimate {})", best.value, best.abs_error_estimate)]
    AccuracyNotReached { best: QuadResult, subdivisions: usize },

    #[error("input outside the domain: {0}")]
    InputDomain(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid rejected: {0}")]
    GridRejected(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A classifier could not make sense of a refinement trace.
    #[error("diagnostic failure: {message}")]
    Diagnostic { message: String, trace: Vec<(f64, f64)> },
}
