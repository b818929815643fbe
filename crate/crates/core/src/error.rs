use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lexicon line {line}: {reason}")]
    LexiconLoad { line: usize, reason: String },

    #[error("no noun found in {text:?}")]
    NoChunkFound { text: String },

    #[error("prompt has no chunks")]
    EmptyPrompt,

    #[error("chunk roots differ: {left:?} vs {right:?}")]
    RootMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("timestep mismatch: {expected} vs {actual}")]
    TimestepMismatch { expected: usize, actual: usize },

    #[error("invalid guidance parameters: w={w}, eta={eta}")]
    InvalidGuidance { w: f64, eta: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid schedule parameters: {0}")]
    InvalidScheduleParams(String),

    #[error("timestep order violated: t={t}, t_prev={t_prev}")]
    TimestepOrder { t: usize, t_prev: usize },

    #[error("timestep {0} is not on the inference grid")]
    OffGrid(usize),

    #[error("unknown concept(s): {}", .0.join(", "))]
    ConceptUnknown(Vec<String>),

    #[error("concept {phrase:?} matches several components: {}", .labels.join(", "))]
    AmbiguousConcept { phrase: String, labels: Vec<String> },

    #[error("invalid model spec: {0}")]
    InvalidModel(String),

    #[error("zero-norm embedding")]
    ZeroNorm,

    #[error("denominator {0:e} too close to zero")]
    DivisionByNearZero(f64),

    #[error("row {row} is not a probability vector: {reason}")]
    NotAProbability { row: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 for I/O and input validation, 2 for parse/locate
    /// failures, 3 for concept resolution.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::LexiconLoad { .. }
            | Error::NoChunkFound { .. }
            | Error::EmptyPrompt
            | Error::RootMismatch { .. } => 2,
            Error::ConceptUnknown(_) | Error::AmbiguousConcept { .. } => 3,
            _ => 1,
        }
    }
}
