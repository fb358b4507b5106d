use thiserror::Error;

/// Errors produced by model construction, set building, and governor execution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("admissible set not finitely determined within {t_max} prediction steps (last worst margin {last_margin:.3e})")]
    NonTermination { t_max: usize, last_margin: f64 },

    #[error("robustified constraint set became empty at prediction step {step}")]
    InfeasibleRobustification { step: usize },

    #[error("governor initialization failed: {0}")]
    Initialization(String),

    #[error("invalid input: {0}")]
    InputValidation(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
