use thiserror::Error;

/// Errors raised by the rate-distortion computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NotPositiveDefinite: Cholesky pivot {pivot:e} at index {index} is below the threshold")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("NotSymmetric: entries ({i},{j}) and ({j},{i}) differ")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix order {0} is outside the supported range 1..={max}", max = crate::linalg::MAX_ORDER)]
    UnsupportedOrder(usize),

    #[error("IndexOutOfRange: index {index} for order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("index sets overlap or are empty")]
    InvalidIndexSets,

    #[error("SingularObservation: observed block is not positive definite")]
    SingularObservation,

    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("NotACover: {0}")]
    NotACover(String),

    #[error("Unclassifiable cover for L = {0}")]
    Unclassifiable(usize),

    #[error("UnsupportedTopology: {0}")]
    UnsupportedTopology(String),

    #[error("InvalidDistortion: {0} must be positive and finite")]
    InvalidDistortion(f64),

    #[error("OutOfTrustedRange: d = {d:e} exceeds trusted radius {radius:e}")]
    OutOfTrustedRange { d: f64, radius: f64 },

    #[error("DidNotConverge: {what} after {iterations} iterations (residual {residual:e})")]
    DidNotConverge {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("SpecMismatch: stored {field} = {stored:e}, recomputed {recomputed:e}")]
    SpecMismatch {
        field: &'static str,
        stored: f64,
        recomputed: f64,
    },

    #[error("StructureViolation: residual {0:e} exceeds tolerance")]
    StructureViolation(f64),

    #[error("TargetUnreachable: target {target:e} for source {index} exceeds zero-gain distortion {ceiling:e}")]
    TargetUnreachable {
        index: usize,
        target: f64,
        ceiling: f64,
    },

    #[error("GridTooCoarse: need at least {needed} grid points, got {got}")]
    GridTooCoarse { needed: usize, got: usize },

    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),

    #[error("SeriesDiverges: spectral radius {0} >= 1")]
    SeriesDiverges(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
