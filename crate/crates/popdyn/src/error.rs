use thiserror::Error;

/// Errors produced by the popdyn library.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or parameter set is structurally invalid (wrong dimensions,
    /// non-positive values where positivity is required, unknown names).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A numeric procedure failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The hypotheses of a theorem-backed routine are not satisfied by the
    /// supplied parameters.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
