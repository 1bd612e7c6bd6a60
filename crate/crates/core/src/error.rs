use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pattern set must contain at least {needed} patterns, got {got}")]
    TooFewPatterns { needed: usize, got: usize },

    #[error("duplicate patterns at rows {0} and {1}")]
    DuplicatePattern(usize, usize),

    #[error("non-finite coordinate at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid of {points_per_dim}^{d} points overflows")]
    GridOverflow { points_per_dim: usize, d: usize },

    #[error("query lies outside every support ball (infinite energy at epsilon = 0)")]
    UnsupportedStart,

    #[error("query is not inside exactly one basin (active set has {0} members)")]
    AmbiguousBasin(usize),

    #[error("fixed-point iteration did not settle within {0} steps")]
    IterationCap(usize),

    #[error("{got} patterns exceed the exhaustive enumeration cap of {cap}")]
    TooManyPatterns { got: usize, cap: usize },

    #[error(
        "neighborhood of pattern {anchor} has {size} members, more than the subset cap allows"
    )]
    NeighborhoodBlowup { anchor: usize, size: usize },

    #[error("operation requires a compactly supported kernel, got {0}")]
    NotCompact(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
