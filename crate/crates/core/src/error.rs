use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (empty claims, nonpositive claim, endowment out
    /// of range, inconsistent lengths, bad ids, ...).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A number could not be parsed as an exact rational.
    #[error("cannot parse {0:?} as a rational number")]
    ParseNumber(String),

    /// An exhaustive scan was requested above its configured size limit.
    #[error("{what} limited to {max} agents, got {n}; raise the limit explicitly to force")]
    TooLarge {
        what: &'static str,
        n: usize,
        max: usize,
    },

    /// An agent id was used outside the coalition or problem it belongs to.
    #[error("agent {agent} is not a member of {context}")]
    NotAMember { agent: usize, context: String },

    /// A caller-supplied precondition does not hold.
    #[error("{0}")]
    Precondition(String),

    /// A parametric schedule broke its contract (bad boundary values or
    /// non-monotone samples).
    #[error("parametric schedule contract violated: {0}")]
    ScheduleContract(String),

    /// Bisection did not reach the tolerance within the iteration budget.
    #[error("bisection did not converge within {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: String },

    /// An operation was invoked on a problem in the wrong endowment regime.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// A rule declared properties it does not actually satisfy, detected
    /// mid-construction.
    #[error("rule contract violated: {0}")]
    RuleContract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
