use thiserror::Error;

use crate::network::VertexId;

/// Problems with the shape of an input network or one of its transformations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network has no edges")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({u}, {v}) has non-positive conductance {c}")]
    NonPositiveConductance { u: VertexId, v: VertexId, c: f64 },
    #[error("vertex {vertex} out of range for a network on {n} vertices")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("network is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("vertex set is empty")]
    EmptySet,
    #[error("vertex set covers the whole network")]
    FullSet,
    #[error("network too small: need at least {needed} vertices, have {have}")]
    TooSmall { needed: usize, have: usize },
    #[error("vertex {0} has no neighbours")]
    Isolated(VertexId),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Failures of the linear-algebra layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericalError {
    #[error("grounded Laplacian factorization failed (condition estimate {condition:.3e})")]
    FactorizationFailure { condition: f64 },
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operation requires a dense factorization, network has {n} vertices (limit {limit})")]
    DenseRequired { n: usize, limit: usize },
    #[error(
        "sketch validation failed after {attempts} attempts; worst pair ratio {worst_ratio:.4}"
    )]
    SketchValidationFailed { attempts: usize, worst_ratio: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance table is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("d({0}, {0}) must be zero")]
    NonzeroDiagonal(usize),
    #[error("d({i}, {j}) = {value} is negative or not finite")]
    InvalidDistance { i: usize, j: usize, value: f64 },
    #[error("d({i}, {j}) != d({j}, {i})")]
    Asymmetric { i: usize, j: usize },
    #[error("triangle inequality violated at ({i}, {j}, {k})")]
    Triangle { i: usize, j: usize, k: usize },
    #[error("scale base r = {0} must be at least 16")]
    InvalidR(u32),
    #[error("exact enumeration limited to {limit} points, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("metric has no points")]
    Empty,
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("step budget of {0} jumps exceeded")]
    StepBudgetExceeded(u64),
    #[error("invalid stopping rule: {0}")]
    InvalidRule(String),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(VertexId),
    #[error("need at least {needed} replicas, got {got}")]
    TooFewReplicas { needed: usize, got: usize },
}

/// Umbrella error for operations that cross module boundaries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
