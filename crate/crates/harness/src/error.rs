use serde_json::json;
use sqg_core::error::SqgError;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A config value that fails to parse or violates a precondition.
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] SqgError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("digest mismatch for {path}: manifest has {expected}, file has {actual}")]
    DigestMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error("{0}")]
    ChecksFailed(String),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::Core(_) => "compute",
            HarnessError::Io { .. } => "io",
            HarnessError::DigestMismatch { .. } => "digest_mismatch",
            HarnessError::ChecksFailed(_) => "checks_failed",
        }
    }

    /// Config key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            HarnessError::Config { key, .. } => Some(key),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "key": self.key(),
                "message": self.to_string(),
            }
        })
    }
}
