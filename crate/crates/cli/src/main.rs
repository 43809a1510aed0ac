//! `gauge-nlse` command-line driver.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gauge_nlse::{Preset, RunConfig};

use output::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "gauge-nlse", version, about = "Gauge transformations for NLSEs with complex nonlinearities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Named resolution preset (`desk`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured state and write diagnostics, snapshots and a summary.
    Run(ConfigArgs),
    /// Apply the gauge transformation to a snapshot (or the initial state).
    Transform {
        #[command(flatten)]
        args: ConfigArgs,
        /// JSONL snapshot file; defaults to the configured initial state.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Line of the snapshot file to use.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Check variational derivatives of the configured model against finite differences.
    Derive(ConfigArgs),
    /// Run the built-in invariant suite.
    Check {
        /// Directory for `check.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the model catalog.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

/// Worker count from `GAUGE_NLSE_THREADS` (0 means sequential).
fn workers() -> CliResult<usize> {
    match std::env::var("GAUGE_NLSE_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("GAUGE_NLSE_THREADS must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load(args: &ConfigArgs) -> CliResult<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(p) = &args.preset {
        cfg.apply_preset(p.parse::<Preset>()?);
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.outputs.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let workers = workers()?;
    match cli.command {
        Command::Run(args) => {
            let (cfg, out) = load(&args)?;
            commands::run(&cfg, &out, workers)
        }
        Command::Transform { args, snapshot, index } => {
            let (cfg, out) = load(&args)?;
            commands::transform(&cfg, &out, snapshot.as_deref(), index)
        }
        Command::Derive(args) => {
            let (cfg, out) = load(&args)?;
            commands::derive(&cfg, &out)
        }
        Command::Check { out } => commands::check(out.as_deref(), workers),
        Command::Catalog { json } => commands::catalog(json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::config(e.to_string().trim_end()).to_json());
            return ExitCode::from(output::EXIT_CONFIG as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
