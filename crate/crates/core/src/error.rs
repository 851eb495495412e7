use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid event type name {0:?}")]
    InvalidName(String),

    #[error("duplicate event type {0} in alphabet")]
    DuplicateName(String),

    #[error("alphabet must contain at least one event type")]
    EmptyAlphabet,

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("unknown type {name} at line {line}")]
    UnknownType { name: String, line: usize },

    #[error("decreasing timestamp at line {line}: {timestamp} < {previous}")]
    DecreasingTimestamp {
        line: usize,
        timestamp: u64,
        previous: u64,
    },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown symbol {name} at position {position}")]
    UnknownSymbol { name: String, position: usize },

    #[error("pattern matches the empty sequence")]
    MatchesEmpty,

    #[error("pattern language is empty")]
    EmptyLanguage,

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("context table too large: |alphabet|^order = {alphabet_size}^{order} exceeds 1000000 rows")]
    ContextTableTooLarge { alphabet_size: usize, order: usize },

    #[error("context [{0}] was never observed in training and smoothing is 0")]
    UnobservedContext(String),

    #[error("horizon insufficient: mass {achievable} within the horizon is below theta {theta}")]
    HorizonInsufficient { achievable: f64, theta: f64 },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("invalid {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 for I/O, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
