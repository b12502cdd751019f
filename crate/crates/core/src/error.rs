use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("action {action} is not legal in state {state}")]
    IllegalAction { state: usize, action: usize },

    #[error("evaluation system is singular (multichain or degenerate chain)")]
    SingularChain,

    #[error("extended value iteration did not converge after {iterations} iterations (span {span:e} > {epsilon:e})")]
    NoConvergence {
        iterations: usize,
        span: f64,
        epsilon: f64,
    },

    #[error("confidence level delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("box constraints do not intersect the simplex")]
    InfeasibleBox,

    #[error("reward range is degenerate: every reward equals {0}")]
    DegenerateRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
