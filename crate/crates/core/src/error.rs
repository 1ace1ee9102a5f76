use thiserror::Error;

use crate::multiindex::MultiIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("multi-index must have at least one entry")]
    EmptyIndex,

    #[error("{lower} is not below {upper}")]
    NotBelow { lower: MultiIndex, upper: MultiIndex },

    #[error("index {alpha} exceeds family order {order}")]
    IndexOutOfRange { alpha: MultiIndex, order: u32 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {point} lies outside the domain box")]
    OutsideDomain { point: String },

    #[error("non-finite value {value} at node {path}")]
    NonFinite { path: String, value: f64 },

    #[error("expression node {0} has no exact rational value")]
    NotExact(String),

    #[error("coefficient constraint violated at alpha={alpha}, point {point}: sum = {value}")]
    ConstraintViolated {
        alpha: MultiIndex,
        point: String,
        value: f64,
    },

    #[error("smoothness k={k} requires {field} to vanish identically")]
    NecessityClause { k: u32, field: &'static str },

    #[error("invalid support pattern: {0}")]
    InvalidPattern(String),

    #[error("combinatorial budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}
