use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown entity type `{0}`")]
    UnknownType(String),

    #[error("invalid tag `{0}` (expected `O` or `I-<Type>`)")]
    InvalidTag(String),

    #[error("document `{doc_id}`: {expected} tokens but {found} tags")]
    LengthMismatch {
        doc_id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("document `{0}` has no counterpart")]
    MissingDocument(String),

    #[error("invalid sentence: {0}")]
    InvalidSentence(String),

    #[error("empty phrase")]
    EmptyPhrase,

    #[error("phrase `{phrase}` is already registered as {existing}, cannot add it as {requested}")]
    PhraseConflict {
        phrase: String,
        existing: String,
        requested: String,
    },

    #[error("invalid regex `{pattern}`: {message}")]
    Regex { pattern: String, message: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error("infeasible synthetic corpus: {0}")]
    Infeasible(String),

    #[error("missing predictions for iteration {0}")]
    MissingIteration(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
