use std::path::PathBuf;

/// Errors produced by the simulator, learner and file loaders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("action {action} out of range for {n_devices} devices")]
    ActionOutOfRange { action: usize, n_devices: usize },

    #[error("episode already terminated")]
    EpisodeTerminated,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{what} = {value} out of range (allowed 0..={max})")]
    CountOutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown reward id `{id}`; valid ids: {valid}")]
    UnknownReward { id: String, valid: String },

    #[error("unknown {what} `{value}`")]
    UnknownName { what: &'static str, value: String },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("{}: line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("cannot access {}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
