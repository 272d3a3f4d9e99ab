use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("series too short: {0}")]
    TooShort(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("index {index} out of range (window count {windows})")]
    IndexOutOfRange { index: usize, windows: usize },

    #[error("INNS table exceeds cap of {cap} entries")]
    InnsCapExceeded { cap: usize },

    #[error("invalid angle threshold {0}: must lie in (0, 180]")]
    InvalidAngle(f64),

    #[error("unknown shape family `{0}`")]
    UnknownFamily(String),

    #[error("core too short: {0}")]
    CoreTooShort(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("window length mismatch: chain uses {chain}, manifest uses {manifest}")]
    WindowMismatch { chain: usize, manifest: usize },

    #[error("oracle guard exceeded: {windows} windows > {limit}")]
    GuardExceeded { windows: usize, limit: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::EmptyInput | Error::NonFinite { .. } => "parse",
            Error::TooShort(_) => "too-short",
            Error::InvalidWindow(_) => "invalid-window",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::InnsCapExceeded { .. } => "inns-cap",
            Error::InvalidAngle(_) => "invalid-angle",
            Error::UnknownFamily(_) => "unknown-family",
            Error::CoreTooShort(_) => "core-too-short",
            Error::InvalidParam(_) => "invalid-param",
            Error::WindowMismatch { .. } => "window-mismatch",
            Error::GuardExceeded { .. } => "guard",
            Error::Empty(_) => "empty",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
