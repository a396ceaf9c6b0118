use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate image: all entries are zero")]
    DegenerateImage,

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("no measurements")]
    NoMeasurements,

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error("duplicate decoder id `{0}`")]
    DuplicateDecoder(String),

    #[error("problem too large for brute force: {0} candidate lines")]
    TooLarge(usize),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
