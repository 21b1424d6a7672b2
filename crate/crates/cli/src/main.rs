use std::path::PathBuf;
use std::process::ExitCode;

use alab_cli::config::{parse_config, ExperimentConfig, EXPERIMENTS};
use alab_cli::run::{apply_overrides, execute, write_artifacts};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

/// Seed of `alab oracle-suite` when none is given.
const ORACLE_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "alab", version, about = "Monte Carlo checks of eigenvalue-counting estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Inertia counting against full diagonalization, and rank-one interlacing.
    OracleSuite {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the experiment names accepted in configurations.
    ListExperiments,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn run(mut config: ExperimentConfig, o: Overrides) -> Result<bool> {
    apply_overrides(&mut config, o.seed, o.samples, o.workers, o.csv, o.json)?;
    let outcome = execute(&config)?;
    for line in outcome.summary_lines() {
        println!("{line}");
    }
    write_artifacts(&config, &outcome)?;
    Ok(outcome.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListExperiments => {
            for (name, summary) in EXPERIMENTS {
                println!("{name:<14} {summary}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { config, overrides } => std::fs::read_to_string(&config)
            .with_context(|| format!("reading {}", config.display()))
            .and_then(|text| {
                parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {e}", config.display()))
            })
            .and_then(|cfg| run(cfg, overrides)),
        Command::OracleSuite { overrides } => run(ExperimentConfig::oracle_suite(ORACLE_SEED), overrides),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
