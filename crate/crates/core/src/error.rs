use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("joint {index} = {value} m outside [0, {max}] m")]
    JointOutOfBounds { index: usize, value: f64, max: f64 },

    #[error("curvature {kappa} 1/m with actuator radius {radius} m gives a non-positive actuator length")]
    CurvatureTooHigh { kappa: f64, radius: f64 },

    #[error("gait curvature {requested} 1/m exceeds reachable curvature {reachable} 1/m")]
    Unreachable { requested: f64, reachable: f64 },

    #[error("point count mismatch: shape has {shape}, backbone has {backbone}")]
    PointCountMismatch { shape: usize, backbone: usize },

    #[error("only {converged} of {total} samples converged")]
    TooFewConverged { converged: usize, total: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
