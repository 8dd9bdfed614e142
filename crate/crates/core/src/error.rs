//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("eigensolver failed to converge at q = {q}")]
    EigenConvergence { q: f64 },
    #[error("time step {dt_us:.3} us exceeds 1 us during a shaken segment")]
    StepTooLarge { dt_us: f64 },
    #[error("wrap hazard: {0}")]
    WrapHazard(String),
    #[error("domain too small: {0}")]
    DomainTooSmall(String),
    #[error("hold window too short for spectral estimate: {0}")]
    WindowTooShort(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate library mismatch: {0}")]
    LibraryMismatch(String),
    #[error("open interferometer plan: {0}")]
    OpenPlan(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
