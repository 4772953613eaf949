use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the control stack.
#[derive(Debug)]
pub enum Error {
    /// A configuration value or key was rejected. `key` names the offending entry.
    Config { key: String, message: String },
    /// Operands of incompatible widths or shapes.
    Shape { context: &'static str, expected: usize, got: usize },
    /// An API was called outside its contract (empty batch, stale cache, ...).
    Usage(String),
    /// Training produced a non-finite value or otherwise diverged.
    Training(String),
    /// A checkpoint or record file could not be decoded or does not fit the config.
    Load(String),
    Io(io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn shape(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Shape { context, expected, got }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    pub fn load(message: impl Into<String>) -> Self {
        Error::Load(message.into())
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config { key, message } => write!(f, "configuration error at `{key}`: {message}"),
            Error::Shape { context, expected, got } => {
                write!(f, "shape mismatch in {context}: expected {expected}, got {got}")
            }
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Training(m) => write!(f, "training error: {m}"),
            Error::Load(m) => write!(f, "load error: {m}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(io::Error::other(e))
    }
}
