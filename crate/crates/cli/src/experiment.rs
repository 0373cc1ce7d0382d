//! Desk-scale experiment grid: a few short simulated topologies, every IDS
//! variant trained on them, and the seed-averaged comparisons between them.

use std::collections::BTreeMap;

use fanet_sim::config::AreaBounds;
use fanet_sim::dataset::{build_scenario, ScenarioData, Selection};
use fanet_sim::{run_simulation, seed, AttackKind, SimConfig};
use fsfl_ids::eval::Metrics;
use fsfl_ids::{run_plan, ExperimentPlan, ModelKind, Variant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Laptop-sized simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeskPreset {
    pub area_side_m: f64,
    pub duration_s: f64,
    pub uavs: usize,
    pub connections: usize,
}

impl Default for DeskPreset {
    fn default() -> Self {
        Self { area_side_m: 4300.0, duration_s: 600.0, uavs: 20, connections: 4 }
    }
}

impl DeskPreset {
    pub fn sim_config(&self, topology: u32, root_seed: u64) -> SimConfig {
        SimConfig {
            area: AreaBounds::new([self.area_side_m, self.area_side_m, 300.0]),
            duration_s: self.duration_s,
            node_count: self.uavs,
            traffic_connections: self.connections,
            topology_id: topology,
            seed: topology_seed(root_seed, topology),
            ..SimConfig::default()
        }
    }
}

pub fn topology_seed(root_seed: u64, topology: u32) -> u64 {
    seed::derive_indexed(root_seed, "topology", topology as u64)
}

/// Datasets for one attacked run paired with its clean twin.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: u32,
    pub kind: AttackKind,
    pub ratio: f64,
    /// 36 windows per class per UAV, spread over the run.
    pub decimated: ScenarioData,
    /// Every window of the run.
    pub full: ScenarioData,
}

impl Scenario {
    /// FL trains on every window; the other variants on the decimated set.
    pub fn data_for(&self, variant: Variant) -> &ScenarioData {
        if variant == Variant::Federated {
            &self.full
        } else {
            &self.decimated
        }
    }
}

pub fn simulate_scenarios(
    preset: &DeskPreset,
    topologies: u32,
    kinds: &[AttackKind],
    ratios: &[f64],
    root_seed: u64,
) -> Result<Vec<Scenario>, CliError> {
    let jobs: Vec<(u32, AttackKind, f64)> = (0..topologies)
        .flat_map(|t| kinds.iter().flat_map(move |&k| ratios.iter().map(move |&r| (t, k, r))))
        .collect();
    let clean: Vec<_> = (0..topologies)
        .into_par_iter()
        .map(|t| run_simulation(&preset.sim_config(t, root_seed)))
        .collect::<Result<_, _>>()?;
    jobs.into_par_iter()
        .map(|(t, kind, ratio)| {
            let cfg = preset.sim_config(t, root_seed).with_attack(kind, ratio);
            let hot = run_simulation(&cfg)?;
            let base = &clean[t as usize].samples;
            let windows = (preset.duration_s / cfg.window_s).floor() as usize;
            let ds_seed = seed::derive(cfg.seed, "dataset");
            Ok(Scenario {
                topology: t,
                kind,
                ratio,
                decimated: build_scenario(base, &hot.samples, Selection::decimated(), ds_seed)?,
                full: build_scenario(base, &hot.samples, Selection::full(windows), ds_seed)?,
            })
        })
        .collect()
}

/// One training job of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: Variant,
    pub model: ModelKind,
    pub shots: usize,
    pub kind: AttackKind,
    pub ratio: f64,
    pub topology: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub metrics: Metrics,
    /// Training samples the server read; nonzero only for C-IDS.
    pub server_sample_reads: usize,
}

pub fn plan_for(cell: &Cell) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(cell.variant, cell.model);
    p.seed = seed::derive_indexed(cell.seed, "train", cell.topology as u64);
    p.shots = (cell.variant != Variant::Federated).then_some(cell.shots);
    p
}

pub fn run_cells(scenarios: &[Scenario], cells: &[Cell]) -> Result<Vec<CellResult>, CliError> {
    cells
        .par_iter()
        .map(|cell| {
            let sc = scenarios
                .iter()
                .find(|s| s.topology == cell.topology && s.kind == cell.kind && s.ratio == cell.ratio)
                .ok_or_else(|| CliError::Missing(format!("no scenario for {cell:?}")))?;
            let report = run_plan(&plan_for(cell), &sc.data_for(cell.variant).uavs)?;
            Ok(CellResult { cell: *cell, metrics: report.metrics, server_sample_reads: report.server_sample_reads })
        })
        .collect()
}

/// Mean accuracy and detection rate of the results matching `keep`.
pub fn mean_where(results: &[CellResult], keep: impl Fn(&Cell) -> bool) -> (f64, f64) {
    let sel: Vec<&CellResult> = results.iter().filter(|r| keep(&r.cell)).collect();
    let n = sel.len().max(1) as f64;
    let acc = sel.iter().map(|r| r.metrics.accuracy).sum::<f64>() / n;
    let drs: Vec<f64> = sel.iter().filter_map(|r| r.metrics.dr).collect();
    let dr = drs.iter().sum::<f64>() / drs.len().max(1) as f64;
    (acc, dr)
}

/// The comparisons drawn from the grid, each as (left, right) means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    /// FSFL CNN accuracy at 5% and 25% attackers, per attack.
    pub ratio_gain: BTreeMap<String, (f64, f64)>,
    /// FSFL CNN flooding detection rate per ratio of at least 15%.
    pub flooding_dr: BTreeMap<String, f64>,
    /// L-IDS and FL-IDS CNN accuracy at 25%, per attack.
    pub local_vs_federated: BTreeMap<String, (f64, f64)>,
    /// CNN and DNN FSFL accuracy over the whole grid.
    pub cnn_vs_dnn: (f64, f64),
    /// 20-shot and 10-shot accuracy for C-IDS and FSFL-IDS.
    pub shots_20_vs_10: BTreeMap<String, (f64, f64)>,
}

pub const LOW: f64 = 0.05;
pub const HIGH: f64 = 0.25;
pub const FLOOD_RATIOS: [f64; 2] = [0.15, 0.25];

/// The trend grid over `topologies` x `seeds`.
pub fn trend_cells(topologies: u32, seeds: &[u64]) -> Vec<Cell> {
    let mut cells = Vec::new();
    let base = |variant, model, shots, kind, ratio, topology, seed| Cell { variant, model, shots, kind, ratio, topology, seed };
    for t in 0..topologies {
        for &s in seeds {
            for kind in AttackKind::ATTACKS {
                for ratio in [LOW, HIGH] {
                    for model in ModelKind::ALL {
                        cells.push(base(Variant::FewShotFederated, model, 36, kind, ratio, t, s));
                    }
                }
                for v in [Variant::Local, Variant::Federated] {
                    cells.push(base(v, ModelKind::Cnn, 36, kind, HIGH, t, s));
                }
                for shots in [10, 20] {
                    for v in [Variant::Centralized, Variant::FewShotFederated] {
                        cells.push(base(v, ModelKind::Cnn, shots, kind, HIGH, t, s));
                    }
                }
            }
            cells.push(base(Variant::FewShotFederated, ModelKind::Cnn, 36, AttackKind::Flooding, FLOOD_RATIOS[0], t, s));
        }
    }
    cells.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    cells.dedup();
    cells
}

pub fn trends(results: &[CellResult]) -> Trends {
    let fsfl_cnn36 = |c: &Cell| c.variant == Variant::FewShotFederated && c.model == ModelKind::Cnn && c.shots == 36;
    let mut t = Trends {
        ratio_gain: BTreeMap::new(),
        flooding_dr: BTreeMap::new(),
        local_vs_federated: BTreeMap::new(),
        cnn_vs_dnn: (0.0, 0.0),
        shots_20_vs_10: BTreeMap::new(),
    };
    for kind in AttackKind::ATTACKS {
        let lo = mean_where(results, |c| fsfl_cnn36(c) && c.kind == kind && c.ratio == LOW).0;
        let hi = mean_where(results, |c| fsfl_cnn36(c) && c.kind == kind && c.ratio == HIGH).0;
        t.ratio_gain.insert(kind.to_string(), (lo, hi));
        let l = mean_where(results, |c| c.variant == Variant::Local && c.kind == kind).0;
        let f = mean_where(results, |c| c.variant == Variant::Federated && c.kind == kind).0;
        t.local_vs_federated.insert(kind.to_string(), (l, f));
    }
    for r in FLOOD_RATIOS {
        let dr = mean_where(results, |c| fsfl_cnn36(c) && c.kind == AttackKind::Flooding && c.ratio == r).1;
        t.flooding_dr.insert(format!("{r}"), dr);
    }
    let fsfl36 = |c: &Cell, m| c.variant == Variant::FewShotFederated && c.shots == 36 && c.model == m && c.ratio != FLOOD_RATIOS[0];
    t.cnn_vs_dnn = (
        mean_where(results, |c| fsfl36(c, ModelKind::Cnn)).0,
        mean_where(results, |c| fsfl36(c, ModelKind::Dnn)).0,
    );
    for v in [Variant::Centralized, Variant::FewShotFederated] {
        let at = |k: usize| mean_where(results, |c| c.variant == v && c.shots == k && c.model == ModelKind::Cnn && c.ratio == HIGH).0;
        t.shots_20_vs_10.insert(v.to_string(), (at(20), at(10)));
    }
    t
}
