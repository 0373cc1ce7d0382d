//! TOML input files. Unknown keys are rejected everywhere.

use std::path::Path;

use fanet_sim::{AttackKind, SimConfig};
use fsfl_ids::federated::EvalMode;
use fsfl_ids::hyperband::SearchSpace;
use fsfl_ids::{ExperimentPlan, HeadKind, ModelKind, TrainConfig, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

/// The simulation grid: every topology once attack-free and once per
/// (attack, ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub seed: u64,
    pub topologies: u32,
    pub attacks: Vec<AttackKind>,
    pub ratios: Vec<f64>,
    /// Base simulation settings; attack fields, seed and topology id are
    /// filled in per grid entry.
    pub sim: SimConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            topologies: 10,
            attacks: AttackKind::ATTACKS.to_vec(),
            ratios: vec![0.05, 0.1, 0.15, 0.2, 0.25],
            sim: SimConfig::default(),
        }
    }
}

impl GridConfig {
    /// Attack-free runs first, then attacks in listed order, per topology.
    pub fn entries(&self) -> Vec<(u32, AttackKind, f64)> {
        let mut v = Vec::new();
        for t in 0..self.topologies {
            v.push((t, AttackKind::None, 0.0));
            for &k in &self.attacks {
                for &r in &self.ratios {
                    v.push((t, k, r));
                }
            }
        }
        v
    }

    pub fn sim_config(&self, topology: u32, kind: AttackKind, ratio: f64) -> SimConfig {
        let base = SimConfig {
            topology_id: topology,
            seed: crate::experiment::topology_seed(self.seed, topology),
            ..self.sim.clone()
        };
        base.with_attack(kind, ratio)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.topologies == 0 {
            v.push("topologies must be at least 1".into());
        }
        if self.attacks.contains(&AttackKind::None) {
            v.push("attacks must not list 'none'; attack-free twins are always simulated".into());
        }
        for r in &self.ratios {
            if !(*r > 0.0 && *r < 1.0) {
                v.push(format!("ratio {r} must lie in (0, 1)"));
            }
        }
        if !self.attacks.is_empty() && self.ratios.is_empty() {
            v.push("ratios is empty".into());
        }
        for e in self.entries().iter().take(2) {
            v.extend(self.sim_config(e.0, e.1, e.2).violations());
        }
        v.sort();
        v.dedup();
        v
    }
}

/// A training plan file: one IDS configuration, one scenario, many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub variant: Variant,
    pub model: ModelKind,
    pub attack: AttackKind,
    pub ratio: f64,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Topologies to train on; all available when absent.
    #[serde(default)]
    pub topologies: Option<Vec<u32>>,
    #[serde(default)]
    pub head: HeadKind,
    #[serde(default)]
    pub eval: EvalMode,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "one")]
    pub local_epochs: usize,
    #[serde(default = "train_frac")]
    pub train_frac: f64,
}

fn default_shots() -> usize {
    36
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn one() -> usize {
    1
}

fn train_frac() -> f64 {
    0.8
}

impl PlanFile {
    pub fn plan(&self, seed: u64) -> ExperimentPlan {
        ExperimentPlan {
            variant: self.variant,
            model: self.model,
            head: self.head,
            shots: (self.variant != Variant::Federated).then_some(self.shots),
            rounds: self.rounds,
            local_epochs: self.local_epochs,
            train: self.train,
            train_frac: self.train_frac,
            eval: self.eval,
            seed,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.plan(0).violations();
        if self.attack == AttackKind::None {
            v.push("attack must be one of sinkhole, blackhole, flooding".into());
        }
        if self.seeds.is_empty() {
            v.push("seeds is empty".into());
        }
        if self.shots == 0 {
            v.push("shots must be at least 1".into());
        }
        v
    }
}

/// Hyperband settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneFile {
    #[serde(default)]
    pub space: SearchSpace,
    /// Rounds or epochs given to a full-budget trial.
    pub max_resource: u64,
    #[serde(default = "eta")]
    pub eta: u64,
    #[serde(default)]
    pub seed: u64,
}

fn eta() -> u64 {
    3
}
