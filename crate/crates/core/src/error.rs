use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum SglcError {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid patch size: {0}")]
    PatchSize(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("grid patch {index}: {source}")]
    GridPatch {
        index: usize,
        #[source]
        source: Box<SglcError>,
    },

    #[error("window at ({y}, {x}): {source}")]
    WindowPatch {
        y: usize,
        x: usize,
        #[source]
        source: Box<SglcError>,
    },

    #[error("processor `{name}` produced a non-finite sample")]
    NonFiniteOutput { name: String },

    #[error("window plan leaves pixel ({y}, {x}) uncovered")]
    UncoveredPixel { y: usize, x: usize },

    #[error("malformed tensor file: {0}")]
    MalformedTensor(String),

    #[error("external command exited with status {status}: {stderr}")]
    ExternalExit { status: i32, stderr: String },

    #[error("external command timed out after {seconds} s: {stderr}")]
    ExternalTimeout { seconds: u64, stderr: String },

    #[error("external command wrote a malformed tensor: {message}; stderr: {stderr}")]
    ExternalMalformedTensor { message: String, stderr: String },

    #[error("external command returned shape {got}, expected {expected}; stderr: {stderr}")]
    ExternalShapeMismatch {
        expected: String,
        got: String,
        stderr: String,
    },

    #[error("failed to launch external command `{command}`: {source}")]
    ExternalSpawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SglcError>;

impl SglcError {
    pub(crate) fn shape_mismatch(expected: impl Into<String>, got: impl Into<String>) -> Self {
        SglcError::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
