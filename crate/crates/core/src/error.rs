use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("divergence at iteration {t} (agent {agent})")]
    Divergence { t: usize, agent: usize },

    #[error("reference solve stopped at gradient norm {grad_norm:e}: {message}")]
    Diagnostics { message: String, grad_norm: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("monitor refused: {0}")]
    MonitorRefused(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("sweep has {points} points, budget is {budget}")]
    SweepBudget { points: usize, budget: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
