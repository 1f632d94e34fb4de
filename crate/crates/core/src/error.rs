use std::path::PathBuf;

/// Errors produced anywhere in the scoring pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("missing resource: {}", .0.display())]
    MissingResource(PathBuf),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("dimension mismatch at line {line}: expected {expected}, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("seed dictionary has no usable pairs")]
    EmptyDictionary,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("label mask is empty")]
    EmptyMask,

    #[error("unknown source: {0}")]
    UnknownSource(String),

    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),

    #[error("duplicate sentence index {index} in debate {debate}")]
    DuplicateIndex { debate: String, index: usize },

    #[error("unknown debate id: {0}")]
    UnknownDebateId(String),

    #[error("unsupported bundle version {found} (this build reads up to {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
