use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sqg_harness::{dispatch, parse_config, Command, HarnessError};

#[derive(Parser)]
#[command(name = "sqg", version, about = "Subcritical SQG solver and determining-modes experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `experiment.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the config echo and summary on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Single run: trajectory CSV and final checkpoint
    Simulate(Common),
    /// Twin run with slaved low modes
    TwinSync(Common),
    /// Twin run with a perturbed force on the second member
    Perturb(Common),
    /// Twin runs over a list of slaving shells
    Sweep(Common),
    /// Invariant and property suite
    Validate(Common),
    /// Absorbing radii and determining wavenumber
    Bounds(Common),
}

fn run(cli: Cli) -> Result<serde_json::Value, HarnessError> {
    let (command, args) = match cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::TwinSync(a) => (Command::TwinSync, a),
        Sub::Perturb(a) => (Command::Perturb, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Validate(a) => (Command::Validate, a),
        Sub::Bounds(a) => (Command::Bounds, a),
    };
    let config = match &args.config {
        Some(path) => {
            let mut cfg = parse_config(path)?;
            if let Some(seed) = args.seed {
                cfg.experiment.seed = seed;
            }
            if !args.quiet {
                println!("{}", cfg.echo());
            }
            Some(cfg.resolve()?)
        }
        None if command.needs_config() => {
            return Err(HarnessError::config("--config", format!("`{}` needs --config", command.name())))
        }
        None => None,
    };
    let out = args
        .out
        .or_else(|| config.as_ref().and_then(|c| c.config.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let summary = dispatch(command, config.as_ref(), &out)?;
    if !args.quiet {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    }
    Ok(summary)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
