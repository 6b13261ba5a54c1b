use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("kernel `{kernel}` returned a non-finite value")]
    Kernel { kernel: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("monitor `{monitor}` violated at t = {time}: {detail}")]
    Monitor {
        monitor: &'static str,
        time: f64,
        detail: String,
    },

    #[error("instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("measure error: {0}")]
    Measure(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scenario parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that mean the dynamics left the region where the
    /// theory applies (monitor violations, blow-up), as opposed to bad input.
    pub fn is_runtime_failure(&self) -> bool {
        matches!(self, Error::Monitor { .. } | Error::Instability { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
