use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Field or buffer dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Parameters or bundle contents violate an operation's contract.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("camera: {0}")]
    Camera(String),

    /// A reduction had nothing to reduce over.
    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Format(#[from] crate::io::FormatError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
