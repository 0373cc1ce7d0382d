use std::path::Path;
use std::process::Command;

use fanet_sim::AttackKind;
use fsfl_cli::config::GridConfig;
use fsfl_cli::experiment::DeskPreset;
use fsfl_cli::manifest::{Manifest, FILE};
use fsfl_cli::pipeline::{self, Outcome, ReportRow, REPORT_HEADER};
use fsfl_cli::CliError;
use fsfl_ids::Variant;

fn small_grid(topologies: u32) -> GridConfig {
    GridConfig {
        seed: 3,
        topologies,
        attacks: vec![AttackKind::Flooding],
        ratios: vec![0.25],
        sim: DeskPreset { duration_s: 300.0, ..DeskPreset::default() }.sim_config(0, 3),
    }
}

fn fsfl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fsfl"))
}

#[test]
fn stages_skip_when_current_and_rerun_when_inputs_change() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, data) = (dir.path().join("sim"), dir.path().join("data"));
    assert_eq!(pipeline::simulate(&small_grid(1), &sim).unwrap(), Outcome::Ran);
    assert_eq!(pipeline::simulate(&small_grid(1), &sim).unwrap(), Outcome::UpToDate);
    assert_eq!(pipeline::dataset(&sim, &[10], &data).unwrap(), Outcome::Ran);
    assert_eq!(pipeline::dataset(&sim, &[10], &data).unwrap(), Outcome::UpToDate);
    assert_eq!(pipeline::dataset(&sim, &[10, 20], &data).unwrap(), Outcome::Ran);

    // a damaged output forces a rerun
    let trace = sim.join(pipeline::trace_file(0, AttackKind::None, 0.0));
    std::fs::write(&trace, "garbage").unwrap();
    assert_eq!(pipeline::simulate(&small_grid(1), &sim).unwrap(), Outcome::Ran);
    assert_eq!(pipeline::simulate(&small_grid(2), &sim).unwrap(), Outcome::Ran);
    assert_eq!(Manifest::load(&sim).unwrap().unwrap().entries.len(), 4);
}

#[test]
fn missing_clean_twin_names_the_topology() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    pipeline::simulate(&small_grid(2), &sim).unwrap();
    let mut m = Manifest::load(&sim).unwrap().unwrap();
    m.entries.retain(|e| !(e["topology"] == 1 && e["attack"] == "none"));
    m.save(&sim).unwrap();
    let err = pipeline::dataset(&sim, &[10], &dir.path().join("data")).unwrap_err();
    assert!(matches!(err, CliError::Missing(_)));
    assert!(err.to_string().contains("topology 1"), "{err}");
}

#[test]
fn nested_shot_files_and_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, data) = (dir.path().join("sim"), dir.path().join("data"));
    pipeline::simulate(&small_grid(1), &sim).unwrap();
    pipeline::dataset(&sim, &[20, 10], &data).unwrap();
    let rows = |k: usize| fanet_sim::dataset::import_csv(&data.join(pipeline::dataset_file(AttackKind::Flooding, 0.25, Some(k)))).unwrap();
    let (ten, twenty) = (rows(10), rows(20));
    assert_eq!(ten.len(), 20 * 2 * 10);
    assert_eq!(twenty.len(), 20 * 2 * 20);
    assert!(ten.iter().all(|s| twenty.contains(s)));
    assert!(data.join(pipeline::dataset_file(AttackKind::Flooding, 0.25, None)).exists());
}

#[test]
fn errors_map_to_categories_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("grid.toml");
    std::fs::write(&bad, "topologis = 2\n").unwrap();
    let out = fsfl().args(["simulate", "--config"]).arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    std::fs::write(&bad, "topologies = 0\nratios = [1.5]\n").unwrap();
    let out = fsfl().args(["simulate", "--config"]).arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2));
    assert!(err.contains("topologies") && err.contains("1.5"), "{err}");

    let out = fsfl().args(["dataset", "--traces"]).arg(dir.path().join("none")).arg("--out").arg(dir.path().join("d")).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = fsfl().args(["train", "--plan", "/nonexistent.toml", "--data", "x", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cost_command_prints_the_product_and_ratio() {
    let out = fsfl().args(["cost", "--nodes", "50", "--model", "cnn", "--rounds", "10", "--baseline-rounds", "100"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(&format!("cost={} bytes", 50 * 805 * 10 * 8)), "{text}");
    assert!(text.contains("ratio=0.1"), "{text}");
}

fn row(variant: Variant, model: &str, attack: AttackKind, ratio: f64, acc: f64) -> String {
    format!("{variant},{model},classifier,{attack},{ratio},36,10,0,0,{acc},1,0,1,0,1,0,20,805,10,8,1288000")
}

#[test]
fn report_pivots_only_complete_grids() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    std::fs::create_dir_all(&run).unwrap();
    let mut text = format!("{REPORT_HEADER}\n");
    for kind in AttackKind::ATTACKS {
        for ratio in pipeline::PIVOT_RATIOS {
            for model in ["dnn", "cnn"] {
                text.push_str(&row(Variant::FewShotFederated, model, kind, ratio, 0.75));
                text.push('\n');
            }
        }
    }
    text.push_str(&row(Variant::Local, "cnn", AttackKind::Sinkhole, 0.25, 0.5));
    text.push('\n');
    std::fs::write(run.join("report.csv"), &text).unwrap();
    let out = dir.path().join("report");
    pipeline::report(&[run.clone()], &out).unwrap();
    let pivot = std::fs::read_to_string(out.join("pivot_FSFL.csv")).unwrap();
    assert_eq!(pivot.lines().count(), 1 + 15);
    assert!(pivot.lines().nth(1).unwrap().ends_with(",75.00,75.00"));
    assert!(!out.join("pivot_L.csv").exists());
    assert_eq!(pipeline::report(&[run], &out).unwrap(), Outcome::UpToDate);
    assert!(Path::new(&out.join(FILE)).exists());
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 31);
    assert!(results.lines().skip(1).all(|l| ReportRow::parse(l).is_ok()));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["grid.toml", "desk.toml"] {
        let g: GridConfig = fsfl_cli::config::load(&dir.join(name)).unwrap();
        assert!(g.violations().is_empty(), "{name}: {:?}", g.violations());
    }
    let g: GridConfig = fsfl_cli::config::load(&dir.join("grid.toml")).unwrap();
    assert_eq!(g.entries().len(), 160);
    let p: fsfl_cli::config::PlanFile = fsfl_cli::config::load(&dir.join("fsfl.toml")).unwrap();
    assert!(p.violations().is_empty());
    let t: fsfl_cli::config::TuneFile = fsfl_cli::config::load(&dir.join("tune.toml")).unwrap();
    t.space.validate().unwrap();
}
