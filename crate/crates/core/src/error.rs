use std::path::PathBuf;

/// Errors surfaced by construction, validation, and numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An evaluation was requested outside the domain of definition.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    /// Two measures that must carry equal mass do not.
    #[error("mass mismatch: {0}")]
    MassMismatch(String),
    /// A radial map failed a monotonicity or range requirement.
    #[error("invalid map: {0}")]
    InvalidMap(String),
    /// A density touched zero where division by it is required.
    #[error("division guard: {0}")]
    DivisionGuard(String),
    /// An explicit step produced a negative density.
    #[error("CFL violation: {0}")]
    CflViolation(String),
    /// The implicit solver exhausted its retry budget.
    #[error("step failure: {0}")]
    StepFailure(String),
    /// Mollification could not certify its invariants.
    #[error("mollification error: {0}")]
    Mollification(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
