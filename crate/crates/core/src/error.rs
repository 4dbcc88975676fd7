use thiserror::Error;

use crate::geometry::PointSet;
use crate::system::AttractorResult;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("point set must not be empty")]
    EmptyPointSet,

    #[error("invalid domain box: {0}")]
    InvalidDomain(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("map {index} does not send the domain box into itself (image point {point:?})")]
    MapLeavesBox { index: usize, point: Vec<f64> },

    #[error("empty word has no associated composition")]
    EmptyWord,

    #[error("unknown symbol {symbol} (system has {count} maps)")]
    UnknownSymbol { symbol: usize, count: usize },

    #[error("invalid coefficient table: {0}")]
    InvalidTable(String),

    #[error("condition alpha fails: d_{i}{j} = {value} >= 1", i = .i + 1, j = .j + 1)]
    AlphaViolation { i: usize, j: usize, value: f64 },

    #[error("map {index} has Lipschitz bound {value} >= 1, cannot synthesize coefficients")]
    NotContractive { index: usize, value: f64 },

    #[error("coefficient synthesis requires affine maps; map {index} is not affine")]
    NotAffine { index: usize },

    #[error("Picard iteration did not converge after {iterations} steps (residual {residual})")]
    PicardNonConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("attractor iteration did not converge after {} steps (step gap {})", .0.iterations, .0.step_gap)]
    AttractorNonConvergence(Box<AttractorResult>),

    #[error("projection did not converge by depth {depth} (residual diameter {residual_diam})")]
    ProjectionNonConvergence {
        depth: usize,
        residual_diam: f64,
        last: PointSet,
    },

    #[error("word enumeration of {requested} words exceeds budget {budget}; use a smaller depth")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("degenerate viewport: {0}")]
    DegenerateViewport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
