use thiserror::Error;

/// Errors surfaced by encoding, training, and checkpoint handling.
#[derive(Debug, Error)]
pub enum AgentError {
    #[error("cannot batch an empty list of graphs")]
    EmptyBatch,

    #[error("circuit is not in canonical native form")]
    NotCanonical,

    #[error("environment already terminated; reset before stepping")]
    EpisodeFinished,

    #[error("dataset has no {0} circuits")]
    EmptyDataset(&'static str),

    #[error("invalid training config: {0}")]
    Config(String),

    #[error(
        "checkpoint was trained for actions [{checkpoint}] but this build registers [{registry}]"
    )]
    RegistryMismatch { checkpoint: String, registry: String },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint format version {0}")]
    CheckpointVersion(u32),

    #[error(transparent)]
    Core(#[from] rlpass_core::CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
