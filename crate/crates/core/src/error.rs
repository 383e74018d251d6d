use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration violates a stated constraint.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// The requested quantity is not defined for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A non-finite intermediate value appeared at the given index.
    #[error("numeric failure at index {index}: {what}")]
    Numeric { what: String, index: usize },

    /// A state coordinate exceeded the divergence guard.
    #[error("divergence at step {step}: state exceeded {limit:e}")]
    Divergence { step: usize, limit: f64 },

    /// Every optimizer start failed or the fit preconditions do not hold.
    #[error("fit failed: {0}")]
    FitFailure(String),

    /// The information matrix is singular or nearly so.
    #[error("covariance unavailable: {0}")]
    Covariance(String),

    /// A Monte-Carlo experiment produced too many failed fits.
    #[error("experiment invalid: {0}")]
    Experiment(String),

    /// Malformed input data (CSV parsing and friends).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
