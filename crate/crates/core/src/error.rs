use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("OFF header error: {0}")]
    OffHeader(String),

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("degenerate mesh: total surface area is zero")]
    DegenerateMesh,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported encoder configuration: {0}")]
    UnsupportedEncoder(String),

    #[error("frequency grid of {terms} terms exceeds the cap of {cap}")]
    ResourceLimit { terms: u128, cap: u128 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("max-as-relu-mean infeasible in column {column}: {reason}")]
    Infeasible { column: usize, reason: String },

    #[error("invalid severity for {kind}: {message}")]
    InvalidSeverity { kind: String, message: String },

    #[error("operation would leave an empty point cloud")]
    WouldEmpty,

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("rotation angle too close to pi for a unique logarithm")]
    LogAtPi,

    #[error("singular normal equations")]
    Singular,

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Empty(_)
            | Error::OffHeader(_)
            | Error::IndexOutOfRange { .. }
            | Error::DegenerateMesh
            | Error::DegenerateDataset(_)
            | Error::WouldEmpty
            | Error::Serde(_) => ErrorClass::Data,
            Error::NonFinite(_) | Error::Singular | Error::LogAtPi | Error::Infeasible { .. } => {
                ErrorClass::Numerical
            }
            Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::UnsupportedEncoder(_)
            | Error::ResourceLimit { .. }
            | Error::InvalidSeverity { .. }
            | Error::Config(_) => ErrorClass::Config,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
