use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfsError {
    /// A family, field, domain or solver parameter violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No Luxemburg bracket was found after the allowed number of doublings.
    #[error("overflow: {0}")]
    Overflow(String),

    /// The integrability condition near zero for the Sobolev conjugate fails.
    #[error("critical integrability condition violated: {0}")]
    CriticalCondition(String),

    /// Mountain-pass geometry could not be established.
    #[error("geometry failure: {0}")]
    Geometry(String),

    /// An iterative method stopped without meeting its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Unknown suite or malformed command input.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MfsError {
    fn from(err: std::io::Error) -> Self {
        MfsError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MfsError>;
