use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: malformed trace, length {len} bytes is not a multiple of 8")]
    MalformedTrace { path: PathBuf, len: u64 },

    #[error("corrupt sample at index {index}: non-finite value")]
    CorruptSample { index: usize },

    #[error("{path}: {message}")]
    Metadata { path: PathBuf, message: String },

    #[error("window [{start_s} s, {end_s} s) exceeds available duration {available_s} s")]
    Range {
        start_s: f64,
        end_s: f64,
        available_s: f64,
    },

    #[error("unsupported resampling ratio {source_hz} Hz -> {target_hz} Hz")]
    UnsupportedRatio { source_hz: f64, target_hz: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown class `{class}`; known classes: {}", known.join(", "))]
    UnknownClass { class: String, known: Vec<String> },

    #[error("profile line {line}: {message}")]
    Profile { line: usize, message: String },

    #[error("insufficient data: need {needed_s} s, trace has {available_s} s")]
    InsufficientData { needed_s: f64, available_s: f64 },

    #[error("trace `{0}` has no label")]
    MissingLabel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("shape mismatch: expected {expected} features, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("incompatible dataset: {0}")]
    IncompatibleDataset(String),

    #[error("class `{class}` has {have} samples, need at least {need}")]
    InsufficientSamples {
        class: String,
        have: usize,
        need: usize,
    },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("solver did not converge after {iterations} iterations")]
    Solver { iterations: usize },

    #[error("network error on {endpoint}: {source}")]
    Network {
        endpoint: String,
        #[source]
        source: io::Error,
    },

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether the error stems from bad user input rather than an operational
    /// failure. The CLI maps these to the usage exit code.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::UnknownClass { .. }
                | Error::UnsupportedRatio { .. }
                | Error::Range { .. }
                | Error::Shape { .. }
        )
    }
}
