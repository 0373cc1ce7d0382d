//! Intrusion detection models for UAV networks: small neural networks,
//! centralized, local and federated training, Hyperband tuning and metrics.

pub mod adam;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod federated;
pub mod hyperband;
pub mod nn;
pub mod scaler;
pub mod train;

pub use data::{LabeledSet, Matrix};
pub use error::IdsError;
pub use eval::{comm_cost, Confusion, Metrics};
pub use federated::{fedavg, run_plan, EvalMode, ExperimentPlan, MetricsReport, Variant};
pub use nn::{Arch, HeadKind, ModelKind, Network};
pub use scaler::Scaler;
pub use train::{TrainConfig, Trainer};
