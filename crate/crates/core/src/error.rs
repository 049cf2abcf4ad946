use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("source cell at ({x:.3}, {y:.3}) cannot reach the target")]
    UnreachableSource { x: f64, y: f64 },

    #[error("point ({x:.3}, {y:.3}) lies outside the floor field")]
    OutOfBounds { x: f64, y: f64 },

    #[error("could not place agent {index} after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("social distance {0} m lies outside [1.25, 2.25]")]
    Domain(f64),

    #[error("trajectory log is empty")]
    EmptyLog,

    #[error("fewer than two agents present after t = {0} s")]
    InsufficientAgents(f64),

    #[error("default cell has zero contact time for d = {0}")]
    ZeroDefault(f64),

    #[error("degenerate sweep bounds: {0}")]
    DegenerateBounds(String),

    #[error("sweep result has no column {0}")]
    MissingColumn(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
