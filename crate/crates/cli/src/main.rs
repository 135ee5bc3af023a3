//! `ratchet`: runs one configured experiment and writes CSV + manifest output.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ratchet::io::{load_config, run_experiment, ExperimentConfig, ExperimentError, ExperimentKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ratchet", version, about = "Power-packet router experiments")]
struct Args {
    /// JSON experiment config; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and seed fan-out.
    #[arg(long, env = "RATCHET_GRID_JOBS")]
    jobs: Option<usize>,
    /// Experiment kind: single, sweep, critical, network, network_critical, landscape.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = args.experiment {
        cfg.experiment = kind;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("ratchet: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("ratchet: --jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("ratchet: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run_experiment(&cfg) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
            ExitCode::SUCCESS
        }
        Err(ExperimentError::Config(e)) => {
            eprintln!("ratchet: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("ratchet: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
