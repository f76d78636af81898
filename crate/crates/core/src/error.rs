use thiserror::Error;

use crate::metric_core::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("distance matrix entry ({row}, {col}) is not a finite non-negative number: {value}")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("empty metric space")]
    EmptySpace,
    #[error("not a metric space: {0}")]
    NotMetric(Violation),
    #[error("not an ultrametric space: {0}")]
    NotUltrametric(Violation),
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("interval endpoints reversed: point {a} comes after point {b} in the order")]
    ReversedInterval { a: usize, b: usize },
    #[error("invalid gauge function: {0}")]
    InvalidGauge(String),
    #[error("invalid sequence metric: {0}")]
    InvalidSequenceMetric(String),
    #[error("distance undecided at depth {depth}: one prefix extends the other")]
    Undecided { depth: usize },
    #[error("tabulation too short: need g({needed}), have {available} values")]
    InsufficientDepth { needed: usize, available: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid address {address}: {reason}")]
    InvalidAddress { address: String, reason: String },
    #[error("exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("measure does not match tree: {0}")]
    ShapeMismatch(String),
    #[error("{what} is limited to {limit}, got {actual}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("exact search is limited to {cap} points, got {n}; use heuristic mode")]
    ExactSearchCap { n: usize, cap: usize },
    #[error("invalid curve request: {0}")]
    InvalidCurve(String),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("strong separation not certified: images of maps {i} and {j} are {gap} apart")]
    NotSeparated { i: usize, j: usize, gap: f64 },
    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),
    #[error("invalid scales: {0}")]
    InvalidScales(String),
    #[error("total mass is zero: space too small at s = {s}, depth {depth}")]
    ZeroMass { s: f64, depth: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
