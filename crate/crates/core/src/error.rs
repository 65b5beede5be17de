use thiserror::Error;

/// Errors produced by the simulator and the count estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid normalization: shoulder sum `{0}` is zero")]
    InvalidNormalization(&'static str),

    #[error("no conclusive counts")]
    NoData,

    #[error("coincidence pattern must contain exactly 2 photons, got {0}")]
    PhotonCount(usize),

    #[error("program state is not on the equator of the Bloch sphere")]
    NonEquatorial,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dataset schema violation: missing column `{0}`")]
    MissingColumn(String),

    #[error("dataset parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
