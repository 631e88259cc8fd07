use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the documented input domain of a function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },
    /// Inconsistent or missing inputs supplied by the caller.
    #[error("usage error: {0}")]
    Usage(String),
    /// A numerical routine failed (factorization, quadrature, non-finite moment).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Root finding for the global shrinkage parameter could not bracket a solution.
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
