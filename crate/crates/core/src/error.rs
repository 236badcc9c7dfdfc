use thiserror::Error;

/// Invalid configuration, detected when a config value is constructed or loaded.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid rotation matrix: {0}")]
    Rotation(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },
}

impl ConfigError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Param { name, reason: reason.into() }
    }
}

/// A timestamp went backwards relative to the previously processed one.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("time went backwards: {now} s is before {last} s")]
pub struct MonotonicityError {
    pub last: f64,
    pub now: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("episode already ended with {0:?}; reset before stepping")]
    Terminal(crate::sim::TaskEvent),
    #[error("action norm {norm} m exceeds the max step of {max} m")]
    ActionTooLarge { norm: f64, max: f64 },
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
    #[error("non-finite action")]
    NonFiniteAction,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("episode log has no frames")]
    EmptyLog,
    #[error("no AFC trials given")]
    NoTrials,
    #[error("mixed choice counts: trial {index} has {found} choices, expected {expected}")]
    MixedChoices { index: usize, expected: usize, found: usize },
    #[error("invalid trial {index}: {reason}")]
    InvalidTrial { index: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("malformed policy file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
