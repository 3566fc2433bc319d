use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("offspring distribution is not critical: mean {mean} (tolerance {tolerance})")]
    Criticality { mean: f64, tolerance: f64 },
    #[error("degenerate offspring distribution: p_1 = 1")]
    Degenerate,
    #[error("probabilities are invalid: {0}")]
    InvalidPmf(String),
    #[error("not an ordered tree: {0}")]
    NotATree(String),
    #[error("vertex {index} out of range for tree of size {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("size {n} is incompatible with span {span}: the conditioning event has probability zero")]
    Span { n: usize, span: usize },
    #[error("tree size n = {n} must exceed pattern size k = {k}")]
    Size { n: usize, k: usize },
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("rejection budget of {rounds} rounds exhausted")]
    Budget { rounds: u64 },
    #[error("{what} exceeds hard cap {limit}")]
    Cap { what: &'static str, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
