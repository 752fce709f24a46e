use std::path::PathBuf;

use thiserror::Error;

use crate::state::SolutionSeries;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid inertia operator: {0}")]
    InvalidInertia(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dynamics supports only the flat connection (Λ = 0); {0} is non-zero")]
    NonFlatConnection(&'static str),
    #[error("solution blew up (non-finite value) at t = {t}")]
    BlowUp {
        t: f64,
        partial: Box<SolutionSeries>,
    },
    #[error("series has {got} snapshots, need at least {need}")]
    TooFewSnapshots { need: usize, got: usize },
    #[error("snapshot spacing is not uniform (snapshot {index}: Δt = {dt}, expected {expected})")]
    NonUniformSnapshots { index: usize, dt: f64, expected: f64 },
    #[error("CFL condition violated: v·Δt/Δs = {ratio} > 1")]
    CflViolation { ratio: f64 },
    #[error("convergence estimate: {0}")]
    Convergence(String),
    #[error("config: {0}")]
    Config(String),
    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            message: message.into(),
        }
    }
}
