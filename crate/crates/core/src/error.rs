use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is zero; the Lipschitz constant is undefined")]
    ZeroMatrix,

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationFailed { iterations: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("point is not in the feasible set (violation {violation:.3e})")]
    NotInSet { violation: f64 },

    #[error("linear maximization requires a bounded set")]
    UnboundedSet,

    #[error("{algorithm} requires γ {relation} {bound} (got γ = {gamma}, limit {limit})")]
    StepSize {
        algorithm: &'static str,
        relation: &'static str,
        bound: &'static str,
        gamma: f64,
        limit: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tolerance {tol:e} not reached after {iterations} iterations (best residual {best:e})")]
    ToleranceNotReached { tol: f64, best: f64, iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
