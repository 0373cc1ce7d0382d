use crate::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("event queue exhausted at t={at_s}s before the configured duration {duration_s}s")]
    QueueExhausted { at_s: f64, duration_s: f64 },
    #[error("event at t={at_s}s outside accumulator window [{start_s}, {end_s})")]
    OutsideWindow { at_s: f64, start_s: f64, end_s: f64 },
    #[error("insufficient eligible nodes for attackers: need {needed}, have {eligible}")]
    InsufficientEligible { needed: usize, eligible: usize },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
