use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant `{invariant}` violated: {detail}")]
    Validation { invariant: &'static str, detail: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("need at least {needed} episodes, got {got}")]
    InsufficientEpisodes { needed: usize, got: usize },

    #[error("test undefined: {0}")]
    UndefinedTest(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training diverged in fold {fold} at epoch {epoch}: {detail}")]
    Divergence { fold: usize, epoch: usize, detail: String },

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("refusing to overwrite existing {0} (use --force)")]
    WouldOverwrite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
