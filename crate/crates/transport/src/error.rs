use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated frame at byte {offset}: {needed} more byte(s) needed")]
    Truncated { offset: u64, needed: u64 },
    #[error("malformed frame at byte {offset}: {reason}")]
    Malformed { offset: u64, reason: String },
}

impl DecodeError {
    pub fn offset(&self) -> u64 {
        match self {
            DecodeError::Truncated { offset, .. } | DecodeError::Malformed { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
    #[error("line {line}: bad {kind} payload: {reason}")]
    Payload { line: usize, kind: String, reason: String },
    #[error("line {line}: expected seq {expected}, found {got}")]
    SeqGap { line: usize, expected: u64, got: u64 },
    #[error("log has no episode_meta header")]
    MissingMeta,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] compass_core::error::ConfigError),
    #[error(transparent)]
    Session(#[from] compass_core::session::SessionError),
    #[error(transparent)]
    Log(#[from] LogError),
}
