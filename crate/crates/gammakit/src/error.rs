//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {context} (n = {n})")]
    IndexOutOfRange { index: usize, n: usize, context: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("polynomial is not symmetric (residual {residual:.3e} under transposition of variables {i} and {j})")]
    NotSymmetric { i: usize, j: usize, residual: f64 },

    #[error("reduction did not terminate within {bound} elimination steps")]
    ReductionStalled { bound: usize },

    #[error("zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("joint diagonalization failed to refine after {retries} retries (residual {residual:.3e})")]
    RefinementFailed { retries: usize, residual: f64 },

    #[error("basis is not orthonormal (defect {0:.3e})")]
    BasisNotOrthonormal(f64),

    #[error("symbol is singular on the torus near z = exp({theta:.6}i) (smallest singular value {sigma:.3e})")]
    SingularSymbol { theta: f64, sigma: f64 },

    #[error("intertwined symbol is not analytic: negative Fourier coefficient of degree {degree} has norm {norm:.3e}")]
    NotAnalytic { degree: i64, norm: f64 },

    #[error("intertwining residual {0:.3e} exceeds tolerance")]
    IntertwineResidual(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
