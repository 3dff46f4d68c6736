use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance has no groups")]
    EmptyGroups,

    #[error("demand does not exceed supply: n = {n} agents, k = {k} tickets (need n > k)")]
    DemandNotExceedingSupply { n: usize, k: usize },

    #[error("{0} must be positive")]
    Nonpositive(&'static str),

    #[error("parameter violation: {0}")]
    ParamViolation(String),

    #[error("total size {total} is below the budget {budget}")]
    InsufficientTotal { budget: usize, total: usize },

    #[error("action out of range for agent {agent}: {detail}")]
    ActionOutOfRange { agent: usize, detail: String },

    #[error("profile does not match mechanism: {0}")]
    ProfileMismatch(String),

    #[error("{what} = {size} exceeds the exact-evaluation limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("state space of {states} states exceeds the limit {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("fair lottery decomposition failed; residual marginals {residuals:?}")]
    DecompositionFailed { residuals: Vec<f64> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
