use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while parsing, scoring or evaluating traces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("trace {trace_id}: malformed JSON: {message}")]
    Json { trace_id: String, message: String },

    #[error("trace {trace_id}: field `{field}`: {message}")]
    Schema {
        trace_id: String,
        field: String,
        message: String,
    },

    #[error(
        "trace {trace_id}: dimension mismatch at {location}: expected {expected}, got {found}"
    )]
    Dimension {
        trace_id: String,
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("trace {trace_id}: {field} = {value} is outside {range}")]
    Value {
        trace_id: String,
        field: String,
        value: f64,
        range: &'static str,
    },

    #[error("trace {trace_id}: no token vectors and no precomputed attention; cannot build attention chain")]
    MissingVectors { trace_id: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("confidence chain is empty")]
    EmptyChain,

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("segmentation rule: {0}")]
    Rule(String),

    #[error("trace {trace_id}: missing answer_key required for self-consistency")]
    MissingAnswerKey { trace_id: String },

    #[error("trace {trace_id}: missing field `{field}`")]
    MissingField {
        trace_id: String,
        field: &'static str,
    },

    #[error("trace {trace_id}: no correctness label")]
    Unlabeled { trace_id: String },

    #[error("no samples to evaluate")]
    EmptyInput,

    #[error("synth config: {0}")]
    Config(String),

    #[error("trace {trace_id}: missing synth_meta; not a generated corpus")]
    MissingMetadata { trace_id: String },

    #[error("{path}:{line}: {source}")]
    Line {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
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

    /// Strips the line-number wrapper, if any.
    pub fn root(&self) -> &Error {
        match self {
            Error::Line { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
