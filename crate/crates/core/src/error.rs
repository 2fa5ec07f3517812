use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {expected} vs {found}")]
    Dimension {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid box: {0}")]
    Validation(String),

    #[error("frame gap: frame {found} follows frame {previous}")]
    FrameGap { previous: i64, found: i64 },

    #[error("empty sequence in {0}")]
    Empty(&'static str),

    #[error("horizon step {step} out of range 1..={max}")]
    Index { step: usize, max: usize },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("weight file {}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("weight file {} is corrupt: {msg}", path.display())]
    Integrity { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dimension(op: &'static str, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::Dimension { op, expected: expected.into(), found: found.into() }
    }
}
