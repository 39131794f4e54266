use thiserror::Error;

use crate::set::IndexSet;

/// Errors produced by chain construction and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("column {col} sums to {sum}, expected 1")]
    ColumnSum { col: usize, sum: f64 },

    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded: {what} is {found}, limit {limit}")]
    Capacity {
        what: &'static str,
        found: usize,
        limit: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix {index} admits no permutation with positive bottleneck")]
    NotDecomposable { index: usize },

    #[error("accumulated flow along the trajectory of {set} never reaches delta")]
    Starved { set: IndexSet },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
