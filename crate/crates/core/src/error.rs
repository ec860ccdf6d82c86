use thiserror::Error;

use crate::graph::VertexSet;

/// Errors raised by model construction, transforms and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for a graph on {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("set {0} is not a subset of the vertex set")]
    SetOutOfRange(VertexSet),
    #[error("operation requires a nonempty vertex set")]
    EmptySet,
    #[error("{n} vertices exceed the limit of {limit}")]
    TooManyVertices { n: usize, limit: usize },
    #[error("duplicate vertex label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown vertex label `{0}`")]
    UnknownLabel(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("permutation is not a bijection of the vertex set: {0}")]
    NotAPermutation(String),
    #[error("group generated by the given permutations exceeds {limit} elements")]
    GroupTooLarge { limit: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("invalid count table: {0}")]
    InvalidCounts(String),
    #[error("Möbius vector lies outside the simplex: cell {cell} has probability {value:e}")]
    OutsideSimplex { cell: usize, value: f64 },
    #[error("marginal probability of vertex {0} being zero vanishes")]
    ZeroMarginal(usize),
    #[error("log of zero: cell {cell} has positive count but zero probability")]
    LogOfZero { cell: usize },
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("negative deviance {0:e}: the fitted model did not converge to its maximum")]
    NegativeDeviance(f64),
    #[error("degenerate 2x2 margin for vertices {v} and {w}")]
    DegenerateMargin { v: usize, w: usize },
    #[error("conditioning event X_{set} = 0 has probability zero")]
    ZeroConditioningEvent { set: VertexSet },
    #[error("inner solver did not converge for vertex {vertex} after {iterations} iterations")]
    InnerNoConvergence { vertex: usize, iterations: usize },
    #[error("fit did not converge within {cycles} cycles")]
    NoConvergence { cycles: usize },
    #[error("count table contains zero cells; supply a pseudo-count to fit")]
    ZeroCountsRejected,
    #[error("symmetry group does not leave the graph invariant")]
    GraphNotInvariant,
    #[error("fitted distribution violates the symmetry by {max_diff:e}")]
    SymmetryViolatedAtOptimum { max_diff: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate cell on line {line}")]
    DuplicateCell { line: usize },
    #[error("non-binary value `{value}` on line {line}")]
    NonBinaryValue { line: usize, value: String },
    #[error("bad header: {0}")]
    BadHeader(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable identifier of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::VertexOutOfRange { .. } => "vertex-out-of-range",
            Error::SetOutOfRange(_) => "set-out-of-range",
            Error::EmptySet => "empty-set",
            Error::TooManyVertices { .. } => "too-many-vertices",
            Error::DuplicateLabel(_) => "duplicate-label",
            Error::UnknownLabel(_) => "unknown-label",
            Error::SelfLoop(_) => "self-loop",
            Error::NotAPermutation(_) => "not-a-permutation",
            Error::GroupTooLarge { .. } => "group-too-large",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::InvalidCounts(_) => "invalid-counts",
            Error::OutsideSimplex { .. } => "outside-simplex",
            Error::ZeroMarginal(_) => "zero-marginal",
            Error::LogOfZero { .. } => "log-of-zero",
            Error::SingularInformation => "singular-information",
            Error::NegativeDeviance(_) => "negative-deviance",
            Error::DegenerateMargin { .. } => "degenerate-margin",
            Error::ZeroConditioningEvent { .. } => "zero-conditioning-event",
            Error::InnerNoConvergence { .. } => "inner-no-convergence",
            Error::NoConvergence { .. } => "no-convergence",
            Error::ZeroCountsRejected => "zero-counts",
            Error::GraphNotInvariant => "graph-not-invariant",
            Error::SymmetryViolatedAtOptimum { .. } => "symmetry-violated",
            Error::InvalidOption(_) => "invalid-option",
            Error::Parse { .. } => "parse",
            Error::DuplicateCell { .. } => "duplicate-cell",
            Error::NonBinaryValue { .. } => "non-binary-value",
            Error::BadHeader(_) => "bad-header",
        }
    }

    /// Whether the error reports a failure of an iterative solver to converge.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::InnerNoConvergence { .. }
        )
    }
}
