use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric is not symmetric positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("jacobian is rank deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error("point {point:?} lies outside the image of chart {chart}")]
    OutsideChart { chart: usize, point: Vec<f64> },

    #[error("degenerate cell {cell}: non-positive volume")]
    DegenerateCell { cell: usize },

    #[error("mesh graph is disconnected: vertex {to} unreachable from {from}")]
    Disconnected { from: usize, to: usize },

    #[error("empty domain")]
    EmptyDomain,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("sparse factorisation failed: {0}")]
    Factorization(String),

    #[error("stiffness entry ({row}, {col}) = {value:e} is positive; the jump chain needs a monotone mesh")]
    NonMonotoneMesh { row: usize, col: usize, value: f64 },

    #[error("time {t} lies below the smallest grid time {t_min}")]
    BelowTimeGrid { t: f64, t_min: f64 },

    #[error("exponent p = {p} is not admissible in dimension {d}")]
    InadmissibleExponent { p: f64, d: usize },

    #[error("surface measures need a manifold with boundary")]
    NoBoundary,

    #[error("facet {facet} is an artificial cutoff facet and cannot carry surface measure")]
    CutoffFacet { facet: usize },

    #[error("potential is not certified lower semibounded: {0}")]
    NotSemibounded(String),

    #[error("expression error: {0}")]
    Expression(String),
}
