use thiserror::Error;

use crate::dyadic::DyadicIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interval {0} is outside the tree")]
    OutOfTree(DyadicIndex),

    #[error("interval {0} is a leaf and has no children")]
    LeafInterval(DyadicIndex),

    #[error("interval {0} is the root and has no parent")]
    RootInterval(DyadicIndex),

    #[error("depth {depth} outside the supported range 1..={max}")]
    DepthOutOfRange { depth: u32, max: u32 },

    #[error("depth mismatch: expected {expected}, found {found}")]
    DepthMismatch { expected: u32, found: u32 },

    #[error("expected {expected} leaf values, found {found}")]
    LeafCount { expected: usize, found: usize },

    #[error("leaf {index} has non-positive or non-finite value {value}")]
    NonPositiveLeaf { index: usize, value: f64 },

    #[error("leaf {index} has non-finite value {value}")]
    NonFiniteLeaf { index: usize, value: f64 },

    #[error("bad exponent {0}")]
    BadExponent(f64),

    #[error("coefficient at {index} violates |b|/sqrt|I| <= 1 - {slack}: ratio {ratio}")]
    SlackViolation { index: DyadicIndex, ratio: f64, slack: f64 },

    #[error("coefficient at {index} is too close to the positivity boundary: |b|/sqrt|I| = {ratio}")]
    NearSingular { index: DyadicIndex, ratio: f64 },

    #[error("resolvent postcondition failed: residual {0}")]
    ResolventMismatch(f64),

    #[error("power iteration did not converge after {iterations} iterations")]
    EigenFailure { iterations: usize },

    #[error("operator failed the linearity probe: relative defect {0}")]
    NonlinearOperator(f64),

    #[error("malformed specification: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonPositiveLeaf { .. } | Error::SlackViolation { .. } => 3,
            Error::EigenFailure { .. } | Error::NearSingular { .. } | Error::ResolventMismatch(_) => 4,
            _ => 2,
        }
    }
}
