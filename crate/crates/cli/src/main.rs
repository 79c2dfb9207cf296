//! `bpre`: survival sweeps, perpetuity fits and the verification suite.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bpre::verify::Level;
use commands::Failure;
use config::{parse_assignment, parse_document, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "bpre",
    version,
    about = "Branching processes in random environments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival probability estimates, one row per epsilon and estimator.
    Survival(ExperimentArgs),
    /// Perpetuity limit-law fits.
    Perpetuity(ExperimentArgs),
    /// Survival at fixed rho over a decreasing eps_list.
    Sweep(ExperimentArgs),
    /// Runs the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// `key=value` overrides applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    level: LevelArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Evaluate the survival identity with a corrupted shape function.
    #[arg(long, hide = true)]
    mutate_shape: bool,
}

fn load(args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut map = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("config: {}: {e}", path.display())))?;
            parse_document(&text).map_err(Failure::Config)?
        }
        None => Default::default(),
    };
    for o in &args.overrides {
        let (k, v) = parse_assignment(o).map_err(Failure::Config)?;
        map.insert(k, v);
    }
    if let Some(seed) = args.seed {
        map.insert("seed".into(), seed.to_string());
    }
    if let Some(reps) = args.reps {
        map.insert("n_reps".into(), reps.to_string());
    }
    if let Some(out) = &args.out {
        map.insert("out".into(), out.display().to_string());
    }
    ExperimentConfig::from_map(&map).map_err(Failure::Config)
}

fn run(cli: Cli) -> commands::Outcome {
    match cli.command {
        Command::Survival(a) => commands::survival(&load(&a)?, a.json),
        Command::Sweep(a) => commands::sweep(&load(&a)?, a.json),
        Command::Perpetuity(a) => commands::perpetuity(&load(&a)?, a.json),
        Command::Verify(v) => {
            let level = match v.level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            commands::verify(level, v.mutate_shape, v.json, v.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bpre: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
