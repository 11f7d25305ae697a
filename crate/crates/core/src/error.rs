use thiserror::Error;

pub type Result<T, E = SqgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SqgError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid mode ({k1}, {k2}): {reason}")]
    InvalidMode { k1: i64, k2: i64, reason: String },

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("invalid exponent {value}: {reason}")]
    InvalidExponent { value: f64, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shell index {q} outside [{min}, {max}]")]
    ShellOutOfRange { q: i32, min: i32, max: i32 },

    #[error("field support has {support} modes, oracle limit is {limit}")]
    SupportTooLarge { support: usize, limit: usize },

    #[error("numerical blow-up at t = {t}: {what}")]
    BlowUp { t: f64, what: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SqgError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SqgError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
