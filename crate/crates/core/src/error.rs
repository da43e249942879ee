use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants follow the failure classes used by the command line front end,
/// so each maps onto a stable machine-readable code via [`Error::code`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Operands live on different algebras, spaces or chains.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Input outside the domain of an operation (e.g. non-self-adjoint).
    #[error("domain error: {0}")]
    Domain(String),
    /// Level, index or depth out of range.
    #[error("range error: {0}")]
    Range(String),
    /// Instance too large for an exact or element-level routine.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A structural invariant failed during validation.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Iterative solver did not reach its tolerance.
    #[error("no convergence: {message} (best bounds [{lower}, {upper}])")]
    Convergence {
        message: String,
        lower: f64,
        upper: f64,
    },
    /// Numerical breakdown that valid input cannot trigger.
    #[error("internal error: {0}")]
    Internal(String),
    /// Malformed input document.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short stable identifier for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Capacity(_) => "capacity",
            Error::Validation(_) => "validation",
            Error::Convergence { .. } => "convergence",
            Error::Internal(_) => "internal",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
