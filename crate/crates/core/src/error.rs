use thiserror::Error;

/// Errors raised anywhere in the partitioner, model, executors or harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("reverse edge type `{0}` already exists")]
    DuplicateReverse(String),
    #[error("graph already contains reverse relations")]
    AlreadyReversed,
    #[error("seed node {id} out of range for node type `{ntype}` ({count} nodes)")]
    SeedOutOfRange { ntype: String, id: u32, count: usize },
    #[error("invalid metapath: {0}")]
    InvalidMetapath(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("no input features for node type `{0}`")]
    MissingFeatures(String),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("non-finite gradient for {0}")]
    NonFiniteGradient(String),
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("invalid synthetic spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("container format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
