//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("conformity violation: {0}")]
    Conformity(String),

    #[error("pipeline failure: {0}")]
    Pipeline(String),

    #[error("projection failure: {0}")]
    Projection(String),

    #[error("refinement failure: {0}")]
    Refinement(String),

    #[error("terminating-plane tangling: {0}; reduce the slab duration h_time")]
    Tangling(String),

    #[error("degenerate prism split: {0}")]
    DegenerateSplit(String),

    #[error("initial-mesh generation failure: {0}")]
    InitialMesh(String),

    #[error("vertex left the box domain: {0}")]
    OutOfDomain(String),

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("external mesher failed: {0}")]
    ExternalMesher(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invalid_mesh(msg: impl Into<String>) -> Self {
        Error::InvalidMesh(msg.into())
    }

    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    /// Exit-code class: 1 = validation, 2 = pipeline/geometry.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config { .. } | Error::Parse { .. } => 1,
            _ => 2,
        }
    }
}
