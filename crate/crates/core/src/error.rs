use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("signal too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },

    #[error("utterance too short: {frames} frames, convolution needs {needed}")]
    UtteranceTooShort { frames: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("degenerate {0}")]
    Degenerate(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("malformed {kind} file {path}: {reason}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
