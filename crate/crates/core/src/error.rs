use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid robot specification: {0}")]
    InvalidSpec(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("mass matrix is not positive definite at q = {q:?}")]
    SingularMassMatrix { q: Vec<f64> },

    #[error("simulation fault at t = {t}: {reason}; q = {q:?}, qdot = {qdot:?}")]
    SimulationFault {
        t: f64,
        reason: String,
        q: Vec<f64>,
        qdot: Vec<f64>,
    },

    #[error("unknown attachment point `{0}`")]
    UnknownPoint(String),

    #[error("action index {index} out of range for channel `{channel}` ({len} candidates)")]
    ActionOutOfRange {
        channel: String,
        index: usize,
        len: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("no trajectories found in {0}")]
    NoTrajectories(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml parse: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("toml write: {0}")]
    TomlWrite(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
