use thiserror::Error;

use crate::urn::UrnClass;

#[derive(Debug, Error)]
pub enum UrnError {
    #[error("unbalanced replacement matrix: row sums {left} != {right}")]
    Unbalanced { left: u64, right: u64 },

    #[error("operation requires a large urn (1/2 < sigma < 1, bc != 0), got {class:?}")]
    NotLarge { class: UrnClass },

    #[error("composition must contain at least one ball")]
    EmptyComposition,

    #[error("empty sample set")]
    EmptySample,

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("moment not integrable: coordinate {coordinate} has nu + p = {value} <= 0")]
    NotIntegrable { coordinate: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, UrnError>;
