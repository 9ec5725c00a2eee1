use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("system dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("symmetric eigen-solver failed for a {dim}x{dim} matrix: {reason}")]
    EigenFailure { dim: usize, reason: String },

    #[error("step integrator unstable at t = {time}: norm drifted by {drift:.3e}; use a smaller step")]
    Unstable { time: f64, drift: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("only {valid} valid ensemble members ({discarded} discarded by the pole guard); need at least 2")]
    TooFewValid { valid: usize, discarded: usize },

    #[error("no transition detected")]
    NoTransition,

    #[error("unknown model '{name}' (available: {available})")]
    UnknownModel { name: String, available: String },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
