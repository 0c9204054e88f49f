use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("numeric blow-up: {0}")]
    NumericBlowUp(&'static str),

    #[error("out-of-box: {name} = {value} not in [{min}, {max}]")]
    OutOfBox {
        name: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ill-conditioned kernel matrix (jitter exhausted at {jitter:e})")]
    IllConditioned { jitter: f64 },

    #[error("insufficient data: need at least {need}, have {have}")]
    InsufficientData { need: usize, have: usize },

    #[error("unknown domain parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("run observer failed: {0}")]
    Observer(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
