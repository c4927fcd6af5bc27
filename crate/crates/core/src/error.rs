use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("group too large: order {order} exceeds cap {cap}")]
    GroupTooLarge { order: String, cap: u64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("truncation not achieved: degree {degree} reached with tail {tail:e} above {tol:e}")]
    Truncation { degree: i64, tail: f64, tol: f64 },
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("point outside validity region: {0}")]
    OutsideValidity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
