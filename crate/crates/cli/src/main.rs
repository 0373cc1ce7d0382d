use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fsfl_cli::config::{self, GridConfig};
use fsfl_cli::pipeline::{self, Outcome};
use fsfl_cli::CliError;
use fsfl_ids::eval::{CommCost, WEIGHT_BYTES};
use fsfl_ids::{Arch, HeadKind, ModelKind};

#[derive(Parser)]
#[command(name = "fsfl", version, about = "FANET intrusion detection: simulate, build datasets, train, tune, report")]
struct Cli {
    /// Root seed; overrides the seed in the stage's configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the simulation grid.
    Simulate {
        /// Grid file (TOML); built-in defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Build K-shot and every-window datasets from simulation output.
    Dataset {
        #[arg(long)]
        traces: PathBuf,
        /// Shot counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,20,36")]
        shots: Vec<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Train one IDS plan on every selected topology and seed.
    Train {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Hyperband search over a plan's training settings.
    Tune {
        /// Search space and budget (TOML).
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Communication cost N x W x E x S in bytes.
    Cost {
        #[arg(long)]
        nodes: u64,
        /// Weights per model; derived from --model when absent.
        #[arg(long)]
        weights: Option<u64>,
        #[arg(long, default_value = "cnn")]
        model: ModelKind,
        #[arg(long, default_value = "classifier")]
        head: HeadKind,
        #[arg(long)]
        rounds: u64,
        #[arg(long, default_value_t = WEIGHT_BYTES)]
        bytes: u64,
        /// Round count to compare against.
        #[arg(long)]
        baseline_rounds: Option<u64>,
    },
    /// Merge train outputs into tables.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
}

fn status(stage: &str, outcome: Outcome, out: &std::path::Path) {
    match outcome {
        Outcome::Ran => eprintln!("{stage}: wrote {}", out.display()),
        Outcome::UpToDate => eprintln!("{stage}: {} is up to date", out.display()),
    }
}

fn with_seed<T: serde::Serialize + serde::de::DeserializeOwned>(path: &std::path::Path, seed: Option<u64>, key: &str) -> Result<T, CliError> {
    let mut value: toml::Value = config::load(path)?;
    if let (Some(s), Some(t)) = (seed, value.as_table_mut()) {
        let v = if key == "seeds" { toml::Value::Array(vec![toml::Value::Integer(s as i64)]) } else { toml::Value::Integer(s as i64) };
        t.insert(key.into(), v);
    }
    value.try_into().map_err(|e: toml::de::Error| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

fn stage_file<T: serde::Serialize>(dir: &std::path::Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    let text = toml::to_string(value).map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() })?;
    std::fs::write(&path, text).map_err(CliError::io(&path))?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Simulate { config: path, out } => {
            let mut grid: GridConfig = match &path {
                Some(p) => config::load(p)?,
                None => GridConfig::default(),
            };
            if let Some(s) = cli.seed {
                grid.seed = s;
            }
            status("simulate", pipeline::simulate(&grid, &out.out)?, &out.out);
        }
        Cmd::Dataset { traces, shots, out } => {
            status("dataset", pipeline::dataset(&traces, &shots, &out.out)?, &out.out);
        }
        Cmd::Train { plan, data, out } => {
            let plan = match cli.seed {
                Some(_) => {
                    let p: config::PlanFile = with_seed(&plan, cli.seed, "seeds")?;
                    stage_file(&out.out, "plan.toml", &p)?
                }
                None => plan,
            };
            status("train", pipeline::train(&plan, &data, &out.out)?, &out.out);
            let summary = out.out.join("summary.txt");
            print!("{}", std::fs::read_to_string(&summary).map_err(CliError::io(&summary))?);
        }
        Cmd::Tune { space, plan, data, out } => {
            let space = match cli.seed {
                Some(_) => {
                    let t: config::TuneFile = with_seed(&space, cli.seed, "seed")?;
                    stage_file(&out.out, "tune.toml", &t)?
                }
                None => space,
            };
            let (outcome, best) = pipeline::tune(&space, &plan, &data, &out.out)?;
            status("tune", outcome, &out.out);
            match best {
                Some(c) => println!("best: {}", serde_json::to_string(&c).expect("config serializes")),
                None => println!("best: none (no trial finished with a finite score)"),
            }
        }
        Cmd::Cost { nodes, weights, model, head, rounds, bytes, baseline_rounds } => {
            let weights = weights.unwrap_or(Arch::new(model, head).param_count() as u64);
            let c = CommCost { nodes, weights, rounds, weight_bytes: bytes };
            c.validate()?;
            println!("N={nodes} W={weights} E={rounds} S={bytes} cost={} bytes", c.bytes());
            if let Some(b) = baseline_rounds {
                let base = CommCost { rounds: b, ..c };
                base.validate()?;
                println!("baseline E={b} cost={} bytes ratio={}", base.bytes(), c.bytes() as f64 / base.bytes() as f64);
            }
        }
        Cmd::Report { runs, out } => {
            status("report", pipeline::report(&runs, &out.out)?, &out.out);
            let summary = out.out.join("summary.txt");
            print!("{}", std::fs::read_to_string(&summary).map_err(CliError::io(&summary))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")
        {
            eprintln!("error[config]: {e:#}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
