//! Deterministic FANET simulation.
//!
//! The crate drives a single-threaded discrete-event loop over a swarm of
//! UAVs plus one immobile ground base station (GBS). Nodes move under a 3D
//! Gauss-Markov model, talk over a unit-disk radio and route with a reactive
//! AODV implementation. Attackers can run sinkhole, blackhole or RREQ
//! flooding behaviors. Every node keeps a per-window feature accumulator, and
//! closed windows become labeled [`Sample`]s that the [`dataset`] module turns
//! into balanced per-UAV datasets.

pub mod aodv;
pub mod attacks;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod event;
pub mod features;
pub mod mobility;
pub mod packet;
pub mod radio;
pub mod seed;

mod error;

pub use config::{AttackKind, LabelRule, SimConfig};
pub use engine::{run_simulation, SimTrace, Simulation};
pub use error::SimError;
pub use event::SimTime;
pub use features::{FeatureVector, Label, Sample, FEATURE_COUNT};

/// Node identifier. Id 0 is always the ground base station.
pub type NodeId = usize;

/// The ground base station id.
pub const GBS_ID: NodeId = 0;
