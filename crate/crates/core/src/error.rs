use thiserror::Error;

/// Errors raised across the packing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("illegal placement: {0}")]
    IllegalPlacement(String),

    #[error("unknown bin {0}")]
    UnknownBin(u64),

    #[error("unknown item {item} in bin {bin}")]
    UnknownItem { bin: u64, item: u64 },

    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),

    #[error("simplex failed: {0}")]
    NumericalFailure(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("state space too large: {size} exceeds limit {limit}")]
    ExplosionGuard { size: u128, limit: u128 },

    #[error("scenario has no phases")]
    EmptyPhaseList,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("infeasible initial state: {0}")]
    InfeasibleInitial(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
