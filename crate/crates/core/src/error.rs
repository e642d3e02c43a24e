//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the analytic engine, the optimizers, and the simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A scenario or configuration fails validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// No (B, M, lambda > 0) satisfies the outage constraint.
    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    /// An iterative solver exhausted its budget without meeting tolerance.
    #[error("solver did not converge: {op} ({msg})")]
    NonConvergence { op: &'static str, msg: String },

    /// An evaluation exceeded its enumeration or recursion budget.
    #[error("evaluation budget exceeded: {0}")]
    Budget(String),

    /// The simulated load diverges (active population grows without bound).
    #[error("divergent load: {0}")]
    DivergentLoad(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
