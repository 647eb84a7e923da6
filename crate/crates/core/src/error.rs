use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header in {path}: expected `{expected}`, found `{found}`")]
    MalformedHeader {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("duplicate user `{0}` in profiles")]
    DuplicateUser(String),

    #[error("timestamp {timestamp} precedes corpus start {start}")]
    BeforeCorpusStart { timestamp: i64, start: i64 },

    #[error("topic row for ({user}, {slice}) sums to {sum}, expected 1")]
    NonNormalized { user: String, slice: usize, sum: f64 },

    #[error("topic row for `{user}` references unknown slice {slice}")]
    UnknownSlice { user: String, slice: usize },

    #[error("duplicate topic row for ({user}, {slice})")]
    DuplicateTopicRow { user: String, slice: usize },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("missing artifact for stage `{missing}`: run stage `{missing}` first")]
    MissingStage { missing: &'static str },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}
