use fanet_sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum IdsError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid plan: {}", .0.join("; "))]
    InvalidPlan(Vec<String>),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> IdsError {
    IdsError::Shape { expected: expected.to_string(), got: got.to_string() }
}
