use thiserror::Error;

/// Everything that can go wrong while building or checking group elements.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty vector")]
    EmptyVector,
    #[error("not unimodular")]
    NotUnimodular,
    #[error("no witness")]
    NoWitness,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("form matrix is degenerate: {0}")]
    DegenerateForm(String),
    #[error("matrix is not orthogonal for this form")]
    NotOrthogonal,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("index constraint: {0}")]
    IndexConstraint(String),
    #[error("nothing to generate")]
    NothingToGenerate,
    #[error("hyperbolic rank too small: {0}")]
    RankTooSmall(String),
    #[error("enumeration budget of {budget} exceeded after {reached} elements")]
    BudgetExceeded { budget: usize, reached: usize },
    #[error("unsolvable: {0}")]
    Unsolvable(String),
    #[error("shape violation: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
