//! Crate-wide error type.

/// Errors raised by construction, evaluation, simulation, and synthesis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on the caller's input failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation is not defined for these (otherwise valid) arguments,
    /// e.g. asking the quantum side about a property containing a0.
    #[error("domain error: {0}")]
    Domain(String),

    /// A label was not present in the registry or model.
    #[error("not found: {0}")]
    NotFound(String),

    /// Exhaustive search size cap exceeded.
    #[error("too large: {0}")]
    TooLarge(String),

    /// Phase-1 objective landed between the feasibility and infeasibility
    /// thresholds; neither verdict can be certified.
    #[error("numerically ambiguous feasibility (phase-1 objective {objective:.3e})")]
    NumericallyAmbiguous { objective: f64 },

    /// Detection-threshold scan found no feasible efficiency at or above the
    /// scan floor.
    #[error("no feasible detection threshold at or above eta = {eta_min}")]
    NoThreshold { eta_min: f64 },

    /// The no-go evasion construction could not satisfy its own guarantees
    /// with the minimum-violation class family.
    #[error("evasion construction infeasible: {0}")]
    InfeasibleEvasion(String),

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn not_found(msg: impl Into<String>) -> Self {
        Error::NotFound(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
