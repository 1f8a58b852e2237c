use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpecError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is outside the enumerated range (max {max})")]
    OutOfRange { what: &'static str, value: f64, max: f64 },

    #[error("truncation tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    TailBound { bound: f64, tol: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("operands do not match: {0}")]
    Mismatch(String),

    #[error("undefined for rational input {0}")]
    Rational(String),

    #[error("homogeneity violated: |sigma(2 xi) - 2^-d sigma(xi)| = {deviation:.3e}")]
    Homogeneity { deviation: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> SpecError {
    SpecError::InvalidArgument(msg.into())
}
