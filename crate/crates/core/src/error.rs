use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("infeasible sparsity: target {target:.4} but at most {achievable:.4} is reachable while keeping one nonzero per column")]
    InfeasibleSparsity { target: f64, achievable: f64 },

    #[error("unknown preset `{0}` (expected one of XXS, XS, S, M, L, XL)")]
    UnknownPreset(String),

    #[error("invalid model: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidModel(Vec<Violation>),

    #[error("index {index} out of range for axis of extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("duplicate coordinate {0:?}")]
    DuplicateCoordinate(Vec<u32>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("belief shape mismatch: {0}")]
    BeliefShapeMismatch(String),

    #[error("invalid beliefs: {0}")]
    InvalidBeliefs(String),

    #[error("state space of {size} joint states exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
