use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("parse error in {path} at record {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },

    #[error("duplicate index entry ({date}, {stock}) in {path}")]
    DuplicateIndex {
        path: PathBuf,
        date: String,
        stock: String,
    },

    #[error("index mismatch: ({date}, {stock}) {detail}")]
    IndexMismatch {
        date: String,
        stock: String,
        detail: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("no activated points")]
    NoActivatedPoints,

    #[error("activation length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("malformed activation file {path}: {message}")]
    ActivationFormat { path: PathBuf, message: String },

    #[error("missing cached activation vector for {condition} ({path})")]
    CacheMiss { condition: String, path: PathBuf },

    #[error("config error: {0}")]
    Config(String),

    #[error("task for ruleset {signature} failed: {message}")]
    Task { signature: String, message: String },

    #[error("benchmark run workers={workers} repeat={repeat} failed: {message}")]
    Benchmark {
        workers: usize,
        repeat: usize,
        message: String,
    },

    #[error("missing return for stock {stock} on {date}")]
    MissingReturn { date: String, stock: String },
}

impl Error {
    /// Short stable tag used by the CLI in its one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Parse { .. } => "parse",
            Error::DuplicateIndex { .. } => "duplicate_index",
            Error::IndexMismatch { .. } => "index_mismatch",
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidCondition(_) => "invalid_condition",
            Error::NoActivatedPoints => "no_activated_points",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ActivationFormat { .. } => "activation_format",
            Error::CacheMiss { .. } => "cache_miss",
            Error::Config(_) => "config",
            Error::Task { .. } => "task",
            Error::Benchmark { .. } => "benchmark",
            Error::MissingReturn { .. } => "missing_return",
        }
    }

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
}
