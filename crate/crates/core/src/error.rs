use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("missing or malformed parameter `{param}` for `{name}`: {reason}")]
    Parameter {
        name: String,
        param: String,
        reason: String,
    },

    #[error("inner solve did not converge after {iterations} iterations (residual {residual:e})")]
    InnerSolve { iterations: usize, residual: f64 },

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("half-space cuts have empty intersection (chi = {chi:e}, rho = {rho:e})")]
    Infeasible { chi: f64, rho: f64 },

    #[error("numerical corruption: {0}")]
    Corruption(String),
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: dimensions, names, parameters, constant regimes.
    Invalid,
    /// Empty Haugazeau intersection.
    Infeasible,
    /// Inner solve failure, singular systems, non-finite iterates.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DimensionMismatch { .. }
            | Error::Config(_)
            | Error::UnknownName { .. }
            | Error::Parameter { .. } => ErrorClass::Invalid,
            Error::Infeasible { .. } => ErrorClass::Infeasible,
            Error::NonFinite(_)
            | Error::InnerSolve { .. }
            | Error::Singular(_)
            | Error::Corruption(_) => ErrorClass::Numerical,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("step size must be positive, got {gamma}")))
    }
}
