//! Per-UAV balanced datasets built from paired simulation runs.
//!
//! For every UAV the benign class comes from the attack-free twin run and the
//! malicious class from the attacked run of the same topology. Windows are
//! decimated (every `stride`-th window) before selection.
//!
//! When the attacked run gives a UAV too few malicious windows, the class is
//! filled by the first applicable rule:
//! 1. [`Fallback::Resampled`]: draw with replacement from the decimated
//!    malicious windows;
//! 2. [`Fallback::FineResolution`]: draw from the undecimated malicious
//!    windows;
//! 3. [`Fallback::AttackedRun`]: use the decimated windows of the attacked
//!    run as the malicious class regardless of their per-window label.

use std::cmp::Ordering;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, Label, Sample, FEATURE_COUNT};
use crate::{seed, AttackKind, NodeId, SimError};

/// Samples per class per UAV in the reference setting.
pub const SAMPLES_PER_CLASS: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    Exact,
    Resampled,
    FineResolution,
    AttackedRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavData {
    pub node_id: NodeId,
    pub benign: Vec<Sample>,
    pub malicious: Vec<Sample>,
    pub fallback: Fallback,
}

impl UavData {
    pub fn per_class(&self) -> usize {
        self.benign.len()
    }

    /// Both classes, benign first.
    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.benign.iter().chain(self.malicious.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    pub topology_id: u32,
    pub attack_kind: AttackKind,
    pub attacker_ratio: f64,
    pub uavs: Vec<UavData>,
}

impl ScenarioData {
    pub fn samples(&self) -> Vec<Sample> {
        let mut v: Vec<Sample> = self.uavs.iter().flat_map(|u| u.samples().cloned()).collect();
        sort_rows(&mut v);
        v
    }
}

/// How to select windows from each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub per_class: usize,
    /// Keep every `stride`-th window; `None` picks `n_windows / per_class`.
    pub stride: Option<usize>,
}

impl Selection {
    /// The reference decimated selection (36 per class).
    pub fn decimated() -> Self {
        Self { per_class: SAMPLES_PER_CLASS, stride: None }
    }

    /// Every window of the run.
    pub fn full(n_windows: usize) -> Self {
        Self { per_class: n_windows, stride: Some(1) }
    }

    pub fn stride_for(&self, n_windows: usize) -> usize {
        self.stride.unwrap_or((n_windows / self.per_class.max(1)).max(1))
    }
}

/// Window indices kept by decimation: `0, stride, 2*stride, ...`, at most
/// `count` of them.
pub fn decimated_indices(n_windows: usize, stride: usize, count: usize) -> Vec<usize> {
    (0..n_windows).step_by(stride.max(1)).take(count).collect()
}

/// One UAV's samples from a run, in window order.
pub fn node_windows(samples: &[Sample], node: NodeId) -> Vec<&Sample> {
    let mut v: Vec<&Sample> = samples.iter().filter(|s| s.node_id == node).collect();
    v.sort_by(|a, b| a.window_start_s.total_cmp(&b.window_start_s));
    v
}

fn uav_ids(samples: &[Sample]) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = samples.iter().map(|s| s.node_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Pair the samples of an attack-free run with those of an attacked run of
/// the same topology.
pub fn build_scenario(
    clean: &[Sample],
    attacked: &[Sample],
    sel: Selection,
    root_seed: u64,
) -> Result<ScenarioData, SimError> {
    let ids = uav_ids(attacked);
    if ids != uav_ids(clean) {
        return Err(SimError::Dataset("clean and attacked runs cover different UAVs".into()));
    }
    let first = attacked.first().ok_or_else(|| SimError::Dataset("attacked run has no samples".into()))?;
    let (topology_id, attack_kind, attacker_ratio) = (first.topology_id, first.attack_kind, first.attacker_ratio);
    if clean.first().map(|s| s.topology_id) != Some(topology_id) {
        return Err(SimError::Dataset("clean and attacked runs are different topologies".into()));
    }
    let m = sel.per_class;
    let mut uavs = Vec::with_capacity(ids.len());
    for id in ids {
        let clean_w = node_windows(clean, id);
        let hot_w = node_windows(attacked, id);
        let n = clean_w.len().min(hot_w.len());
        let stride = sel.stride_for(n);
        let keep = decimated_indices(n, stride, m);
        if keep.len() < m {
            return Err(SimError::Dataset(format!(
                "UAV {id}: {n} windows at stride {stride} give {} samples, need {m}",
                keep.len()
            )));
        }
        let benign: Vec<Sample> = keep.iter().map(|&i| relabel(clean_w[i], Label::Benign)).collect();

        let mut rng = seed::rng(seed::derive_indexed(root_seed, &format!("fill/{topology_id}/{attack_kind}"), id as u64));
        let coarse: Vec<&Sample> =
            keep.iter().map(|&i| hot_w[i]).filter(|s| s.label == Label::Malicious).collect();
        let (malicious, fallback) = if coarse.len() >= m {
            (coarse.iter().take(m).map(|s| (*s).clone()).collect(), Fallback::Exact)
        } else if !coarse.is_empty() {
            (top_up(&coarse, m, &mut rng), Fallback::Resampled)
        } else {
            let fine: Vec<&Sample> = hot_w[..n].iter().copied().filter(|s| s.label == Label::Malicious).collect();
            if !fine.is_empty() {
                let mut pick = if fine.len() >= m {
                    let mut idx: Vec<usize> = (0..fine.len()).collect();
                    idx.shuffle(&mut rng);
                    idx.truncate(m);
                    idx.sort_unstable();
                    idx.into_iter().map(|i| fine[i].clone()).collect()
                } else {
                    top_up(&fine, m, &mut rng)
                };
                sort_rows(&mut pick);
                (pick, Fallback::FineResolution)
            } else {
                (keep.iter().map(|&i| relabel(hot_w[i], Label::Malicious)).collect(), Fallback::AttackedRun)
            }
        };
        uavs.push(UavData { node_id: id, benign, malicious, fallback });
    }
    Ok(ScenarioData { topology_id, attack_kind, attacker_ratio, uavs })
}

fn relabel(s: &Sample, label: Label) -> Sample {
    Sample { label, ..s.clone() }
}

/// All of `pool` once, then uniform draws with replacement up to `m`.
fn top_up(pool: &[&Sample], m: usize, rng: &mut impl rand::Rng) -> Vec<Sample> {
    let mut out: Vec<Sample> = pool.iter().map(|s| (*s).clone()).collect();
    while out.len() < m {
        out.push((*pool.choose(rng).expect("pool is non-empty")).clone());
    }
    out.truncate(m);
    sort_rows(&mut out);
    out
}

/// K-shot subset: the first `k` entries of a seeded per-class permutation,
/// so smaller shot sets are always prefixes (and subsets) of larger ones.
pub fn k_shot(uav: &UavData, k: usize, root_seed: u64) -> Result<UavData, SimError> {
    if k > uav.benign.len() || k > uav.malicious.len() {
        return Err(SimError::Dataset(format!(
            "UAV {}: {k}-shot needs {k} samples per class, have {}",
            uav.node_id,
            uav.benign.len().min(uav.malicious.len())
        )));
    }
    let pick = |class: &[Sample], tag: &str| {
        let mut idx: Vec<usize> = (0..class.len()).collect();
        idx.shuffle(&mut seed::rng(seed::derive_indexed(root_seed, tag, uav.node_id as u64)));
        idx.truncate(k);
        idx.sort_unstable();
        idx.into_iter().map(|i| class[i].clone()).collect::<Vec<_>>()
    };
    Ok(UavData {
        node_id: uav.node_id,
        benign: pick(&uav.benign, "shots/benign"),
        malicious: pick(&uav.malicious, "shots/malicious"),
        fallback: uav.fallback,
    })
}

/// Number of training samples per class for `m` samples and `train_frac`.
pub fn train_count(m: usize, train_frac: f64) -> usize {
    (train_frac * m as f64 + 1e-9).floor() as usize
}

/// Stratified split with a seeded shuffle per class.
pub fn split_train_test(uav: &UavData, train_frac: f64, root_seed: u64) -> Result<(Vec<Sample>, Vec<Sample>), SimError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (tag, class) in [("split/benign", &uav.benign), ("split/malicious", &uav.malicious)] {
        let m = class.len();
        if m < 2 {
            return Err(SimError::Dataset(format!("UAV {}: {m} samples in a class, need at least 2", uav.node_id)));
        }
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut seed::rng(seed::derive_indexed(root_seed, tag, uav.node_id as u64)));
        let cut = train_count(m, train_frac).clamp(1, m - 1);
        train.extend(idx[..cut].iter().map(|&i| class[i].clone()));
        test.extend(idx[cut..].iter().map(|&i| class[i].clone()));
    }
    Ok((train, test))
}

fn row_order(a: &Sample, b: &Sample) -> Ordering {
    (a.topology_id, a.node_id)
        .cmp(&(b.topology_id, b.node_id))
        .then(a.window_start_s.total_cmp(&b.window_start_s))
        .then(a.label.cmp(&b.label))
        .then(a.attack_kind.cmp(&b.attack_kind))
        .then(a.attacker_ratio.total_cmp(&b.attacker_ratio))
}

/// Canonical CSV row order: topology, node, window, then label.
pub fn sort_rows(v: &mut [Sample]) {
    v.sort_by(row_order);
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["topology_id", "attack_kind", "attacker_ratio", "node_id", "window_start_s"].map(String::from).to_vec();
    h.extend((1..=FEATURE_COUNT).map(|i| format!("f{i:02}")));
    h.push("label".into());
    h
}

/// Write rows in the given order. Floats use the shortest representation
/// that parses back to the same bits.
pub fn write_csv<W: std::io::Write>(writer: W, samples: &[Sample]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header())?;
    for s in samples {
        let mut rec = vec![
            s.topology_id.to_string(),
            s.attack_kind.to_string(),
            s.attacker_ratio.to_string(),
            s.node_id.to_string(),
            s.window_start_s.to_string(),
        ];
        rec.extend(s.features.0.iter().map(|v| v.to_string()));
        rec.push(s.label.as_u8().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(path: &Path, samples: &[Sample]) -> Result<(), SimError> {
    let f = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(f), samples)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<Sample>, SimError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != csv_header() {
        return Err(SimError::Dataset("unexpected CSV header".into()));
    }
    let bad = |line: usize, what: &str| SimError::Dataset(format!("row {line}: bad {what}"));
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(line, what));
        let mut features = FeatureVector::default();
        for k in 0..FEATURE_COUNT {
            features.0[k] = num(5 + k, "feature")?;
        }
        out.push(Sample {
            topology_id: rec[0].parse().map_err(|_| bad(line, "topology_id"))?,
            attack_kind: rec[1].parse().map_err(|_| bad(line, "attack_kind"))?,
            attacker_ratio: num(2, "attacker_ratio")?,
            node_id: rec[3].parse().map_err(|_| bad(line, "node_id"))?,
            window_start_s: num(4, "window_start_s")?,
            features,
            label: rec[5 + FEATURE_COUNT]
                .parse::<u8>()
                .ok()
                .and_then(Label::from_u8)
                .ok_or_else(|| bad(line, "label"))?,
        });
    }
    Ok(out)
}

pub fn import_csv(path: &Path) -> Result<Vec<Sample>, SimError> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}
