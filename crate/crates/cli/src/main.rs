use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cproj_lab::catalog;
use cproj_lab::mobility::Mode;
use cproj_lab::suite::{self, MobilityRequest, Report, RunConfig, Suite};
use cproj_lab::{jplanar, parallel, LabError};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cproj-lab", version, about = "Checks for c-projective structures on Kähler charts")]
struct Cli {
    /// Worker threads (also capped by CPROJ_LAB_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite on a manifold or run config.
    Verify {
        file: PathBuf,
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the cone over a manifold and check it.
    Conify { file: PathBuf },
    /// Dimension of parallel hermitian tensors from sampled holonomy.
    HolonomyDim {
        file: PathBuf,
        #[arg(long)]
        loops: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Possible degrees of mobility, optionally realizing D = k² + ℓ.
    Mobility {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "general")]
        mode: Mode,
        /// `k,l`
        #[arg(long, value_parser = parse_pair)]
        realize: Option<(usize, usize)>,
    },
    Jplanar {
        #[command(subcommand)]
        action: JplanarAction,
    },
    Example {
        #[command(subcommand)]
        action: ExampleAction,
    },
}

#[derive(Subcommand)]
enum JplanarAction {
    /// Geodesics of one metric tested for J-planarity under the other.
    Probe {
        file: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the first trial curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExampleAction {
    List,
    Dump {
        key: String,
        /// Parameters as JSON, e.g. '{"n": 2}'.
        #[arg(long)]
        params: Option<String>,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected k,l")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn load(path: &Path) -> Result<RunConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::SchemaError(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn emit(report: &Report) -> ExitCode {
    println!("{}", report.to_json());
    ExitCode::from(report.exit_code() as u8)
}

fn run(command: &str, cfg: &RunConfig) -> Result<ExitCode, LabError> {
    Ok(emit(&suite::run_command(command, cfg)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        parallel::request_jobs(j);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cproj-lab: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, LabError> {
    match command {
        Command::Verify { file, suite, seed } => {
            let mut cfg = load(&file)?;
            if let Some(s) = suite {
                cfg.suite = s;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run("verify", &cfg)
        }
        Command::Conify { file } => {
            let cfg = RunConfig { suite: Suite::Conify, ..load(&file)? };
            run("conify", &cfg)
        }
        Command::HolonomyDim { file, loops, seed } => {
            let mut cfg = RunConfig { suite: Suite::Holonomy, ..load(&file)? };
            cfg.loops = loops.unwrap_or(cfg.loops);
            cfg.seed = seed.unwrap_or(cfg.seed);
            run("holonomy-dim", &cfg)
        }
        Command::Mobility { n, mode, realize } => {
            let cfg = RunConfig {
                manifold: None,
                mobility: Some(MobilityRequest { n, mode, realize }),
                ..RunConfig::for_manifold(Value::Null, Suite::Mobility)
            };
            run("mobility", &cfg)
        }
        Command::Jplanar { action: JplanarAction::Probe { file, trials, seed, csv } } => {
            let mut cfg = RunConfig { suite: Suite::Jplanar, ..load(&file)? };
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let mut report = suite::run_command("jplanar probe", &cfg)?;
            if let Some(path) = csv {
                let written = suite::jplanar_curve(&cfg).and_then(|c| {
                    let f = std::fs::File::create(&path).map_err(|e| LabError::BadParams(format!("{}: {e}", path.display())))?;
                    jplanar::write_csv(&c, std::io::BufWriter::new(f)).map_err(|e| LabError::BadParams(e.to_string()))
                });
                if let Err(e) = written {
                    report.checks.push(suite::Check::failed("jplanar.csv", &e));
                    report.pass = false;
                }
            }
            Ok(emit(&report))
        }
        Command::Example { action: ExampleAction::List } => {
            println!("{}", serde_json::to_string_pretty(&json!({"schema": suite::SCHEMA, "keys": catalog::KEYS})).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::Example { action: ExampleAction::Dump { key, params } } => {
            let params: Value = match params {
                Some(p) => serde_json::from_str(&p).map_err(|e| LabError::SchemaError(e.to_string()))?,
                None => Value::Null,
            };
            let entry = catalog::get_example(&key, &params)?;
            println!("{}", serde_json::to_string_pretty(&suite::dump_example(&entry)?).unwrap());
            Ok(ExitCode::SUCCESS)
        }
    }
}
