use thiserror::Error;

/// Errors produced by construction, evaluation, and generation routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter fails its domain requirement (negative mass, price out of
    /// range, and so on).
    #[error("domain error: {0}")]
    Domain(String),

    /// An instance or configuration is structurally invalid.
    #[error("invalid config: {0}")]
    Config(String),

    /// An operation that requires triangular agents was given something else.
    #[error("type error: {0}")]
    TypeMismatch(String),

    /// The ex ante solver refuses irregular (non-concave) revenue curves.
    #[error("irregular instance; use irregular module bounds")]
    Irregular,

    /// An all-zero ex ante assignment cannot be triangularized.
    #[error("degenerate assignment: all quantiles are zero")]
    DegenerateAssignment,

    /// A root finder or quadrature routine failed to meet its contract.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The worst-case generator could not bracket a tight value for an agent.
    #[error("bisection failure at agent {agent}: {reason}")]
    Bisection { agent: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
