use thiserror::Error;

/// Crate-wide error type.
///
/// `Config` covers everything a user can get wrong in an input file;
/// `Capacity` is exact-integer overflow (the lattice layer never wraps
/// silently); `Unsupported` marks combinations the theory does not cover
/// (for instance conservative volume factors with `p = d`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("capacity error: {0} (exact 64-bit arithmetic overflow)")]
    Capacity(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported geometry: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the CLI: 1 for bad input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidAction(_) | Error::Domain(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
