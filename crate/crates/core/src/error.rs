use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("center set is empty")]
    EmptyCenters,
    #[error("sketch has seen no points")]
    EmptySketch,
    #[error("assignment constraint mass {constraint} does not match point mass {points}")]
    MassMismatch { constraint: f64, points: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("lp solver failed: {0}")]
    Solver(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no usable rows in input")]
    NoRows,
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
