//! The pipeline stages. Each stage reads files, writes files and a manifest,
//! and is a no-op when the manifest shows its outputs are current.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fanet_sim::dataset::{build_scenario, export_csv, import_csv, k_shot, Fallback, Selection, UavData};
use fanet_sim::{run_simulation, seed, AttackKind, Label, Sample};
use fsfl_ids::eval::{mean_std, pct, WEIGHT_BYTES};
use fsfl_ids::hyperband::{run_hyperband, Config};
use fsfl_ids::{checkpoint, comm_cost, run_plan, Arch, MetricsReport, Network, Variant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{GridConfig, PlanFile, TuneFile};
use crate::error::CliError;
use crate::manifest::{digest_config, digest_file, Manifest};

/// What a stage did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

fn mkdir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(CliError::io(p))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn ratio_tag(r: f64) -> String {
    format!("r{r}")
}

pub fn trace_file(topology: u32, kind: AttackKind, ratio: f64) -> String {
    if kind == AttackKind::None {
        format!("traces/t{topology:03}_none.csv")
    } else {
        format!("traces/t{topology:03}_{kind}_{}.csv", ratio_tag(ratio))
    }
}

/// Shot count of a dataset file; `None` is the every-window set.
pub fn dataset_file(kind: AttackKind, ratio: f64, shots: Option<usize>) -> String {
    match shots {
        Some(k) => format!("{kind}_{}_k{k}.csv", ratio_tag(ratio)),
        None => format!("{kind}_{}_full.csv", ratio_tag(ratio)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub topology: u32,
    pub attack: AttackKind,
    pub ratio: f64,
    pub sim_seed: u64,
    pub windows: usize,
    pub file: String,
}

fn entries<T: for<'de> Deserialize<'de>>(m: &Manifest) -> Result<Vec<T>, CliError> {
    m.entries
        .iter()
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Missing(format!("bad manifest entry: {e}"))))
        .collect()
}

fn require_manifest(dir: &Path, stage: &str) -> Result<Manifest, CliError> {
    let m = Manifest::load(dir)?.ok_or_else(|| CliError::Missing(format!("{} has no manifest", dir.display())))?;
    if m.stage != stage {
        return Err(CliError::Missing(format!("{} holds '{}' output, expected '{stage}'", dir.display(), m.stage)));
    }
    Ok(m)
}

/// Run every simulation of the grid and store the per-window samples.
pub fn simulate(grid: &GridConfig, out: &Path) -> Result<Outcome, CliError> {
    let v = grid.violations();
    if !v.is_empty() {
        return Err(CliError::Invalid(v));
    }
    let digest = digest_config(grid);
    if Manifest::is_current(out, "simulate", &digest, &BTreeMap::new())? {
        return Ok(Outcome::UpToDate);
    }
    mkdir(&out.join("traces"))?;
    let jobs = grid.entries();
    let done: Vec<TraceEntry> = jobs
        .par_iter()
        .map(|&(t, kind, ratio)| {
            let cfg = grid.sim_config(t, kind, ratio);
            let trace = run_simulation(&cfg)?;
            let file = trace_file(t, kind, ratio);
            export_csv(&out.join(&file), &trace.samples)?;
            Ok(TraceEntry { topology: t, attack: kind, ratio, sim_seed: cfg.seed, windows: cfg.window_count(), file })
        })
        .collect::<Result<_, CliError>>()?;
    let mut m = Manifest::new("simulate", digest, vec![grid.seed]);
    for e in &done {
        m.add_output(out, &e.file)?;
        m.entries.push(serde_json::to_value(e).expect("entry serializes"));
    }
    m.save(out)?;
    Ok(Outcome::Ran)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub attack: AttackKind,
    pub ratio: f64,
    /// `None` for the every-window file.
    pub shots: Option<usize>,
    pub file: String,
    pub rows: usize,
    /// UAVs per fallback level across topologies.
    pub fallbacks: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct DatasetKey<'a> {
    shots: &'a [usize],
}

/// Pair attacked runs with their attack-free twins and write K-shot and
/// every-window datasets, one file per (attack, ratio, shots).
pub fn dataset(traces: &Path, shots: &[usize], out: &Path) -> Result<Outcome, CliError> {
    let src = require_manifest(traces, "simulate")?;
    let mut shots: Vec<usize> = shots.to_vec();
    shots.sort_unstable();
    shots.dedup();
    if shots.is_empty() || shots[0] == 0 {
        return Err(CliError::Invalid(vec!["shots must be a non-empty list of positive counts".into()]));
    }
    let digest = digest_config(&DatasetKey { shots: &shots });
    let inputs = BTreeMap::from([("traces".to_string(), digest_file(&traces.join(crate::manifest::FILE))?)]);
    if Manifest::is_current(out, "dataset", &digest, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let runs: Vec<TraceEntry> = entries(&src)?;
    let clean: BTreeMap<u32, &TraceEntry> = runs.iter().filter(|e| e.attack == AttackKind::None).map(|e| (e.topology, e)).collect();
    let mut groups: BTreeMap<(AttackKind, String), Vec<&TraceEntry>> = BTreeMap::new();
    for e in runs.iter().filter(|e| e.attack != AttackKind::None) {
        if !clean.contains_key(&e.topology) {
            return Err(CliError::Missing(format!("topology {} has no attack-free run", e.topology)));
        }
        groups.entry((e.attack, ratio_tag(e.ratio))).or_default().push(e);
    }
    let root = src.seeds.first().copied().unwrap_or(0);
    mkdir(out)?;
    let written: Vec<Vec<DatasetEntry>> = groups
        .par_iter()
        .map(|(_, hot)| {
            let (kind, ratio) = (hot[0].attack, hot[0].ratio);
            let mut per_shot: BTreeMap<Option<usize>, Vec<Sample>> = BTreeMap::new();
            let mut fallbacks: BTreeMap<String, usize> = BTreeMap::new();
            for e in hot {
                let base = import_csv(&traces.join(&clean[&e.topology].file))?;
                let attacked = import_csv(&traces.join(&e.file))?;
                let ds_seed = seed::derive(e.sim_seed, "dataset");
                let dec = build_scenario(&base, &attacked, Selection::decimated(), ds_seed)?;
                let full = build_scenario(&base, &attacked, Selection::full(e.windows), ds_seed)?;
                for u in &dec.uavs {
                    *fallbacks.entry(fallback_name(u.fallback).into()).or_default() += 1;
                }
                per_shot.entry(None).or_default().extend(full.samples());
                let mut prev: Option<Vec<UavData>> = None;
                for &k in &shots {
                    let sub: Vec<UavData> =
                        dec.uavs.iter().map(|u| k_shot(u, k, seed::derive_indexed(root, "shots", e.topology as u64))).collect::<Result<_, _>>()?;
                    if let Some(p) = &prev {
                        check_nested(&sub, p)?;
                    }
                    per_shot.entry(Some(k)).or_default().extend(sub.iter().flat_map(|u| u.samples().cloned()));
                    prev = Some(sub);
                }
            }
            per_shot
                .into_iter()
                .map(|(k, mut rows)| {
                    fanet_sim::dataset::sort_rows(&mut rows);
                    let file = dataset_file(kind, ratio, k);
                    export_csv(&out.join(&file), &rows)?;
                    Ok(DatasetEntry { attack: kind, ratio, shots: k, file, rows: rows.len(), fallbacks: fallbacks.clone() })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, CliError>>()?;
    let mut m = Manifest::new("dataset", digest, src.seeds.clone());
    m.inputs = inputs;
    for e in written.into_iter().flatten() {
        m.add_output(out, &e.file)?;
        m.entries.push(serde_json::to_value(&e).expect("entry serializes"));
    }
    m.save(out)?;
    Ok(Outcome::Ran)
}

fn fallback_name(f: Fallback) -> &'static str {
    match f {
        Fallback::Exact => "exact",
        Fallback::Resampled => "resampled",
        Fallback::FineResolution => "fine-resolution",
        Fallback::AttackedRun => "attacked-run",
    }
}

fn row_key(s: &Sample) -> String {
    format!("{}/{}/{}/{:?}", s.topology_id, s.node_id, s.window_start_s, s.label)
}

/// Every smaller-shot subset must sit inside the next larger one.
fn check_nested(larger: &[UavData], smaller: &[UavData]) -> Result<(), CliError> {
    for (big, small) in larger.iter().zip(smaller) {
        let have: BTreeSet<String> = big.samples().map(row_key).collect();
        if let Some(s) = small.samples().find(|s| !have.contains(&row_key(s))) {
            return Err(CliError::Missing(format!("shot subsets are not nested at {}", row_key(s))));
        }
    }
    Ok(())
}

/// Regroup dataset rows into per-UAV data, per topology.
pub fn uavs_by_topology(rows: &[Sample]) -> BTreeMap<u32, Vec<UavData>> {
    let mut by: BTreeMap<(u32, usize), UavData> = BTreeMap::new();
    for s in rows {
        let u = by.entry((s.topology_id, s.node_id)).or_insert_with(|| UavData {
            node_id: s.node_id,
            benign: Vec::new(),
            malicious: Vec::new(),
            fallback: Fallback::Exact,
        });
        match s.label {
            Label::Benign => u.benign.push(s.clone()),
            Label::Malicious => u.malicious.push(s.clone()),
        }
    }
    let mut out: BTreeMap<u32, Vec<UavData>> = BTreeMap::new();
    for ((t, _), u) in by {
        out.entry(t).or_default().push(u);
    }
    out
}

fn load_dataset(data: &Path, plan: &PlanFile) -> Result<(BTreeMap<u32, Vec<UavData>>, String), CliError> {
    let m = require_manifest(data, "dataset")?;
    let shots = (plan.variant != Variant::Federated).then_some(plan.shots);
    let want = dataset_file(plan.attack, plan.ratio, shots);
    if !m.outputs.contains_key(&want) {
        return Err(CliError::Missing(format!("{} has no {want}", data.display())));
    }
    let rows = import_csv(&data.join(&want))?;
    let mut all = uavs_by_topology(&rows);
    if let Some(keep) = &plan.topologies {
        for t in keep {
            if !all.contains_key(t) {
                return Err(CliError::Missing(format!("topology {t} not in {want}")));
            }
        }
        all.retain(|t, _| keep.contains(t));
    }
    Ok((all, want))
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub variant: Variant,
    pub model: String,
    pub head: String,
    pub attack: AttackKind,
    pub ratio: f64,
    pub shots: String,
    pub rounds: usize,
    pub topology: String,
    pub seed: String,
    pub accuracy: f64,
    pub dr: Option<f64>,
    pub fpr: Option<f64>,
    pub confusion: [u64; 4],
    pub nodes: usize,
    pub weights: usize,
    pub comm_rounds: usize,
    pub comm_cost_bytes: Option<u128>,
}

pub const REPORT_HEADER: &str = "variant,model,head,attack,ratio,shots,rounds,topology,seed,accuracy,dr,fpr,tp,fp,tn,fn,nodes,weights,comm_rounds,weight_bytes,comm_cost_bytes";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ReportRow {
    fn from_report(plan: &PlanFile, topology: u32, seed: u64, r: &MetricsReport) -> Self {
        let federated = plan.variant.is_federated();
        Self {
            variant: plan.variant,
            model: plan.model.to_string(),
            head: plan.head.to_string(),
            attack: plan.attack,
            ratio: plan.ratio,
            shots: if plan.variant == Variant::Federated { "all".into() } else { plan.shots.to_string() },
            rounds: r.plan.rounds(),
            topology: topology.to_string(),
            seed: seed.to_string(),
            accuracy: r.metrics.accuracy,
            dr: r.metrics.dr,
            fpr: r.metrics.fpr,
            confusion: [r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn_],
            nodes: r.participants,
            weights: r.weight_count,
            comm_rounds: r.aggregations,
            comm_cost_bytes: (federated && r.aggregations > 0)
                .then(|| comm_cost(r.participants as u64, r.weight_count as u64, r.aggregations as u64, WEIGHT_BYTES)),
        }
    }

    pub fn to_csv(&self) -> String {
        let [tp, fp, tn, fn_] = self.confusion;
        [
            self.variant.to_string(),
            self.model.clone(),
            self.head.clone(),
            self.attack.to_string(),
            self.ratio.to_string(),
            self.shots.clone(),
            self.rounds.to_string(),
            self.topology.clone(),
            self.seed.clone(),
            self.accuracy.to_string(),
            opt(self.dr),
            opt(self.fpr),
            tp.to_string(),
            fp.to_string(),
            tn.to_string(),
            fn_.to_string(),
            self.nodes.to_string(),
            self.weights.to_string(),
            self.comm_rounds.to_string(),
            WEIGHT_BYTES.to_string(),
            opt(self.comm_cost_bytes),
        ]
        .join(",")
    }

    pub fn parse(line: &str) -> Result<Self, CliError> {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || CliError::Missing(format!("malformed report row '{line}'"));
        if f.len() != REPORT_HEADER.split(',').count() {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad());
        let maybe = |s: &str| if s == "NA" { Ok(None) } else { num(s).map(Some) };
        Ok(Self {
            variant: f[0].parse().map_err(|_| bad())?,
            model: f[1].into(),
            head: f[2].into(),
            attack: f[3].parse().map_err(|_| bad())?,
            ratio: num(f[4])?,
            shots: f[5].into(),
            rounds: int(f[6])? as usize,
            topology: f[7].into(),
            seed: f[8].into(),
            accuracy: num(f[9])?,
            dr: maybe(f[10])?,
            fpr: maybe(f[11])?,
            confusion: [int(f[12])?, int(f[13])?, int(f[14])?, int(f[15])?],
            nodes: int(f[16])? as usize,
            weights: int(f[17])? as usize,
            comm_rounds: int(f[18])? as usize,
            comm_cost_bytes: if f[20] == "NA" { None } else { Some(f[20].parse().map_err(|_| bad())?) },
        })
    }

    fn is_aggregate(&self) -> bool {
        self.seed == "mean" || self.seed == "std"
    }
}

/// Mean and population standard deviation rows over `rows`.
fn aggregate_rows(rows: &[ReportRow]) -> [ReportRow; 2] {
    let stat = |f: &dyn Fn(&ReportRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        if v.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&v);
            (Some(m), Some(s))
        }
    };
    let (am, asd) = stat(&|r| Some(r.accuracy));
    let (dm, dsd) = stat(&|r| r.dr);
    let (fm, fsd) = stat(&|r| r.fpr);
    let mk = |tag: &str, acc: Option<f64>, dr, fpr| ReportRow {
        topology: "all".into(),
        seed: tag.into(),
        accuracy: acc.unwrap_or(f64::NAN),
        dr,
        fpr,
        confusion: [0; 4],
        comm_cost_bytes: None,
        ..rows[0].clone()
    };
    [mk("mean", am, dm, fm), mk("std", asd, dsd, fsd)]
}

fn summary_line(r: &ReportRow) -> String {
    let p = |v: Option<f64>| v.map_or("N/A".to_string(), |x| format!("{}%", pct(x)));
    format!(
        "{}-IDS {} {} {} topology {} seed {}: accuracy {} DR {} FPR {}",
        r.variant,
        r.model.to_uppercase(),
        r.attack,
        ratio_pct(r.ratio),
        r.topology,
        r.seed,
        p(Some(r.accuracy)),
        p(r.dr),
        p(r.fpr)
    )
}

fn ratio_pct(r: f64) -> String {
    format!("{}%", (r * 100.0).round())
}

/// Train the plan on every selected topology and seed.
pub fn train(plan_path: &Path, data: &Path, out: &Path) -> Result<Outcome, CliError> {
    let plan: PlanFile = crate::config::load(plan_path)?;
    let v = plan.violations();
    if !v.is_empty() {
        return Err(CliError::Invalid(v));
    }
    let digest = digest_config(&plan);
    let (topologies, file) = load_dataset(data, &plan)?;
    let inputs = BTreeMap::from([(file.clone(), digest_file(&data.join(&file))?)]);
    if Manifest::is_current(out, "train", &digest, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    mkdir(&out.join("weights"))?;
    let started = Instant::now();
    let jobs: Vec<(u32, u64)> = topologies.keys().flat_map(|&t| plan.seeds.iter().map(move |&s| (t, s))).collect();
    let results: Vec<(u32, u64, MetricsReport)> = jobs
        .par_iter()
        .map(|&(t, s)| {
            let p = plan.plan(seed::derive_indexed(s, "train", t as u64));
            Ok((t, s, run_plan(&p, &topologies[&t])?))
        })
        .collect::<Result<_, CliError>>()?;

    let mut m = Manifest::new("train", digest, plan.seeds.clone());
    m.inputs = inputs;
    let mut csv = format!("{REPORT_HEADER}\n");
    let mut clients = String::from("topology,seed,uav,accuracy,dr,fpr,tp,fp,tn,fn\n");
    let mut summary = String::new();
    let mut rows = Vec::new();
    for (t, s, r) in &results {
        let row = ReportRow::from_report(&plan, *t, *s, r);
        csv.push_str(&row.to_csv());
        csv.push('\n');
        writeln!(summary, "{}", summary_line(&row)).unwrap();
        for c in &r.per_client {
            let cm = c.confusion;
            writeln!(
                clients,
                "{t},{s},{},{},{},{},{},{},{},{}",
                c.uav_id,
                c.metrics.accuracy,
                opt(c.metrics.dr),
                opt(c.metrics.fpr),
                cm.tp,
                cm.fp,
                cm.tn,
                cm.fn_
            )
            .unwrap();
        }
        for (id, why) in &r.excluded {
            writeln!(summary, "  excluded UAV {id}: {why}").unwrap();
        }
        let rel = format!("weights/t{t:03}_s{s}.txt");
        let net = Network::from_params(Arch::new(plan.model, plan.head), r.weights.clone())?;
        let mut buf = Vec::new();
        checkpoint::write(&mut buf, &net)?;
        std::fs::write(out.join(&rel), buf).map_err(CliError::io(out.join(&rel)))?;
        m.add_output(out, &rel)?;
        rows.push(row);
    }
    if rows.len() > 1 {
        for agg in aggregate_rows(&rows) {
            csv.push_str(&agg.to_csv());
            csv.push('\n');
            writeln!(summary, "{}", summary_line(&agg)).unwrap();
        }
    }
    write(&out.join("report.csv"), &csv)?;
    write(&out.join("per_client.csv"), &clients)?;
    write(&out.join("summary.txt"), &summary)?;
    for f in ["report.csv", "per_client.csv", "summary.txt"] {
        m.add_output(out, f)?;
    }
    // wall time varies between runs, so it stays out of the digested files
    write(&out.join("timing.log"), &format!("wall_time_s {:.3}\n", started.elapsed().as_secs_f64()))?;
    m.save(out)?;
    Ok(Outcome::Ran)
}

/// Hyperband over the plan's training configuration. Each trial trains on
/// the training split only and is scored on a held-out part of it.
pub fn tune(tune_path: &Path, plan_path: &Path, data: &Path, out: &Path) -> Result<(Outcome, Option<Config>), CliError> {
    let tf: TuneFile = crate::config::load(tune_path)?;
    let plan: PlanFile = crate::config::load(plan_path)?;
    let v = plan.violations();
    if !v.is_empty() {
        return Err(CliError::Invalid(v));
    }
    tf.space.validate()?;
    let digest = digest_config(&(&tf, &plan));
    let (topologies, file) = load_dataset(data, &plan)?;
    let inputs = BTreeMap::from([(file.clone(), digest_file(&data.join(&file))?)]);
    if Manifest::is_current(out, "tune", &digest, &inputs)? {
        let best = std::fs::read_to_string(out.join("best.json")).ok().and_then(|t| serde_json::from_str(&t).ok());
        return Ok((Outcome::UpToDate, best));
    }
    let seed0 = plan.seeds[0];
    // training rows only: the test split of every UAV is set aside first
    let mut train_only: BTreeMap<u32, Vec<UavData>> = BTreeMap::new();
    for (t, uavs) in &topologies {
        let p = plan.plan(seed::derive_indexed(seed0, "train", *t as u64));
        let mut kept = Vec::new();
        for u in uavs {
            let u = match p.shots {
                Some(k) if k < u.per_class() => k_shot(u, k, p.seed)?,
                _ => u.clone(),
            };
            if let Ok((tr, _)) = fanet_sim::dataset::split_train_test(&u, p.train_frac, p.seed) {
                let (benign, malicious) = tr.into_iter().partition(|s| s.label == Label::Benign);
                kept.push(UavData { node_id: u.node_id, benign, malicious, fallback: u.fallback });
            }
        }
        train_only.insert(*t, kept);
    }
    let objective = |c: &Config, resource: f64| -> f64 {
        let mut pf = plan.clone();
        if let Some(&lr) = c.get("learning_rate") {
            pf.train.learning_rate = lr;
        }
        if let Some(&b) = c.get("batch_size") {
            pf.train.batch_size = b.round().max(1.0) as usize;
        }
        pf.rounds = Some(resource.round().max(1.0) as usize);
        let mut accs = Vec::new();
        for (t, uavs) in &train_only {
            let mut p = pf.plan(seed::derive_indexed(seed0, "tune", *t as u64));
            p.shots = None;
            match run_plan(&p, uavs) {
                Ok(r) => accs.push(r.metrics.accuracy),
                Err(_) => return f64::NAN,
            }
        }
        accs.iter().sum::<f64>() / accs.len().max(1) as f64
    };
    let mut rng = seed::rng(seed::derive(tf.seed, "hyperband"));
    let res = run_hyperband(&tf.space, tf.max_resource, tf.eta, &mut rng, objective)?;
    mkdir(out)?;
    let mut buf = Vec::new();
    res.ledger.write_csv(&mut buf, &tf.space).map_err(CliError::io(out.join("ledger.csv")))?;
    std::fs::write(out.join("ledger.csv"), buf).map_err(CliError::io(out.join("ledger.csv")))?;
    let best = res.best.as_ref().map(|t| t.config.clone());
    let best_json = serde_json::to_string_pretty(&best).expect("config serializes") + "\n";
    write(&out.join("best.json"), &best_json)?;
    let mut m = Manifest::new("tune", digest, vec![tf.seed]);
    m.inputs = inputs;
    m.add_output(out, "ledger.csv")?;
    m.add_output(out, "best.json")?;
    m.save(out)?;
    Ok((Outcome::Ran, best))
}

/// Collect train reports into one table, per-group statistics, and the
/// attack x ratio x model accuracy pivot when the grid is complete.
pub fn report(runs: &[PathBuf], out: &Path) -> Result<Outcome, CliError> {
    if runs.is_empty() {
        return Err(CliError::Missing("no run directories given".into()));
    }
    let mut inputs = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, dir) in runs.iter().enumerate() {
        let path = dir.join("report.csv");
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        inputs.insert(format!("{i:03}:{}", dir.display()), crate::manifest::digest_bytes(text.as_bytes()));
        for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
            let r = ReportRow::parse(line)?;
            if !r.is_aggregate() {
                rows.push(r);
            }
        }
    }
    let digest = digest_config(&"report");
    if Manifest::is_current(out, "report", &digest, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    mkdir(out)?;
    let mut all = format!("{REPORT_HEADER}\n");
    for r in &rows {
        all.push_str(&r.to_csv());
        all.push('\n');
    }
    write(&out.join("results.csv"), &all)?;

    let mut groups: BTreeMap<(String, String, String, String, String), Vec<ReportRow>> = BTreeMap::new();
    for r in &rows {
        let key = (r.variant.to_string(), r.model.clone(), r.attack.to_string(), ratio_tag(r.ratio), r.shots.clone());
        groups.entry(key).or_default().push(r.clone());
    }
    let mut stats = format!("{REPORT_HEADER}\n");
    let mut summary = String::new();
    for g in groups.values() {
        for agg in aggregate_rows(g) {
            stats.push_str(&agg.to_csv());
            stats.push('\n');
            if agg.seed == "mean" {
                writeln!(summary, "{} (n={})", summary_line(&agg), g.len()).unwrap();
            }
        }
    }
    write(&out.join("summary.csv"), &stats)?;

    let mut files = vec!["results.csv".to_string(), "summary.csv".to_string()];
    for variant in Variant::ALL {
        if let Some(p) = pivot(&rows, variant) {
            let name = format!("pivot_{variant}.csv");
            write(&out.join(&name), &p)?;
            writeln!(summary, "{variant}-IDS pivot written to {name}").unwrap();
            files.push(name);
        }
    }
    write(&out.join("summary.txt"), &summary)?;
    files.push("summary.txt".into());
    let mut m = Manifest::new("report", digest, Vec::new());
    m.inputs = inputs;
    for f in &files {
        m.add_output(out, f)?;
    }
    m.save(out)?;
    Ok(Outcome::Ran)
}

pub const PIVOT_RATIOS: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.25];

/// Mean accuracy per (attack, ratio) with one column per model, when all
/// 3 x 5 x 2 cells are present for `variant`.
pub fn pivot(rows: &[ReportRow], variant: Variant) -> Option<String> {
    let models = ["dnn", "cnn"];
    let mut cells: BTreeMap<(AttackKind, String, &str), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.variant == variant) {
        if let Some(m) = models.iter().find(|m| **m == r.model) {
            cells.entry((r.attack, ratio_tag(r.ratio), m)).or_default().push(r.accuracy);
        }
    }
    let mut out = String::from("attack,ratio,dnn_accuracy,cnn_accuracy\n");
    for kind in AttackKind::ATTACKS {
        for ratio in PIVOT_RATIOS {
            let mut line = format!("{kind},{ratio}");
            for m in models {
                let v = cells.get(&(kind, ratio_tag(ratio), m))?;
                line.push_str(&format!(",{}", pct(v.iter().sum::<f64>() / v.len() as f64)));
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    Some(out)
}
