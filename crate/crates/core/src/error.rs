use alloc::string::String;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate canonical label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate cluster id `{0}`")]
    DuplicateCluster(String),
    #[error("cluster `{0}` has no labels")]
    EmptyCluster(String),
    #[error("label `{0}` is empty after normalization")]
    EmptyLabel(String),
    #[error("synonym `{surface}` points at unknown label `{target}`")]
    DanglingSynonym { surface: String, target: String },
    #[error("synonym `{0}` is also a canonical label")]
    SynonymShadowsLabel(String),
    #[error("ground-truth label set is empty")]
    EmptyGroundTruth,
    #[error("label set is empty")]
    EmptyLabels,
    #[error("advantage group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("context {context} out of range for {num_contexts} contexts")]
    ContextOutOfRange { context: usize, num_contexts: usize },
    #[error("position {position} out of range (max_len {max_len})")]
    PositionOutOfRange { position: usize, max_len: usize },
    #[error("token {token} out of range for vocabulary of {vocab_size}")]
    InvalidToken { token: usize, vocab_size: usize },
    #[error("invalid token sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in rollout {rollout}")]
    NonFinite { rollout: usize },
    #[error("non-finite parameters after update at iteration {iteration}")]
    NonFiniteParams { iteration: usize },
    #[error("dataset is empty")]
    EmptyDataset,
}

pub type Result<T> = core::result::Result<T, Error>;
