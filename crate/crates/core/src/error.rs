use thiserror::Error;

/// Errors raised by space construction, field binding and the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("weight of point {index} is {weight}, weights must be strictly positive")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("distance table is not symmetric at ({i}, {j})")]
    AsymmetricDistance { i: usize, j: usize },

    #[error("coordinate {coord} of point {index} is not finite")]
    NonFiniteCoordinate { index: usize, coord: usize },

    #[error("distance table violates the triangle inequality at ({i}, {j}, {k})")]
    TriangleInequality { i: usize, j: usize, k: usize },

    #[error("invalid distance table: {0}")]
    InvalidTable(String),

    #[error("radius {r} is below the resolution rule r >= 3h = {min}")]
    RadiusBelowResolution { r: f64, min: f64 },

    #[error("exponent p = {0} must satisfy p >= 1")]
    ExponentBelowOne(f64),

    #[error("exponent p = {0} must satisfy p > 1")]
    ExponentNotAboveOne(f64),

    #[error("set is empty")]
    EmptySet,

    #[error("field is bound to a different space")]
    SpaceMismatch,

    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("partition denominator {sum} at point {point} is degenerate")]
    DegenerateDenominator { point: usize, sum: f64 },

    #[error("cells do not partition the space: {0}")]
    CellsNotPartition(String),

    #[error("inner set touches the complement of the outer set")]
    TouchingBoundary,

    #[error("invalid radii: {0}")]
    InvalidRadii(String),

    #[error("boundary is empty, the Dirichlet problem is unconstrained")]
    InfeasibleBoundary,

    #[error("solver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("space has no coordinates (explicit distance table)")]
    NoCoordinates,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
