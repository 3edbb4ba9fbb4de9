use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scale index {index} is below the scale floor {floor}")]
    ScaleUnderflow { index: f64, floor: f64 },

    #[error("boundary lift is numerically singular: {0}")]
    SingularLift(String),

    #[error("increment covariance is not positive definite (H = {hurst}, n = {steps})")]
    CovarianceNotPd { hurst: f64, steps: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("explicit second-order process violates Chen's relation (defect {defect:e} at ({s}, {u}, {t}))")]
    ChenViolation { defect: f64, s: usize, u: usize, t: usize },

    #[error("scale index mismatch: expected {expected}, found {found}")]
    Index { expected: f64, found: f64 },

    #[error("value space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("Young integration needs a driver exponent above 1/2, got {0}")]
    Regularity(f64),

    #[error("Dirichlet boundary noise needs exponent above {threshold}, got {gamma}")]
    DirichletRegularity { gamma: f64, threshold: f64 },

    #[error("Picard iteration failed to contract on the window starting at t = {window_start} after {halvings} halvings (last factor {last_factor})")]
    ContractionFailure {
        window_start: f64,
        halvings: usize,
        last_factor: f64,
    },

    #[error("a-priori bound violated at t = {time}: |y|_(-eta) = {norm}")]
    AprioriBound { time: f64, norm: f64 },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Distinct process exit status per variant, starting at 10.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 10,
            Error::ScaleUnderflow { .. } => 11,
            Error::SingularLift(_) => 12,
            Error::CovarianceNotPd { .. } => 13,
            Error::GridMismatch(_) => 14,
            Error::ChenViolation { .. } => 15,
            Error::Index { .. } => 16,
            Error::SpaceMismatch(_) => 17,
            Error::Regularity(_) => 18,
            Error::DirichletRegularity { .. } => 19,
            Error::ContractionFailure { .. } => 20,
            Error::AprioriBound { .. } => 21,
            Error::Io { .. } => 22,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
