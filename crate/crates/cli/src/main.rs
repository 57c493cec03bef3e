mod commands;
mod config;
mod errors;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};
use errors::{exit_code, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE};

/// Pallet and pallet-hole post-processing: association, evaluation,
/// augmentation, loss checks and hyperparameter search.
#[derive(Debug, Parser)]
#[command(name = "palletmap", version)]
struct Cli {
    /// JSON file mirroring every flag; flags and env vars take precedence.
    #[arg(long, global = true, env = "PALLETMAP_CONFIG")]
    config: Option<PathBuf>,

    /// Seed for every random stream.
    #[arg(long, global = true, env = "PALLETMAP_SEED")]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, env = "PALLETMAP_FORMAT")]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset manifest, its label files and split fractions.
    Validate(commands::validate::Args),
    /// Map holes to pallets for one prediction file.
    Associate(commands::associate::Args),
    /// Score predictions against a manifest's labels.
    Evaluate(commands::evaluate::Args),
    /// Augment PPM/PGM images and their YOLO labels.
    Augment(commands::augment::Args),
    /// Run a TPE study on a built-in objective.
    Tune(commands::tune::Args),
    /// Compare analytic loss gradients with finite differences.
    Losscheck(commands::losscheck::Args),
    /// Ingest, associate and evaluate in one pass.
    Pipeline(commands::pipeline::Args),
}

/// What a subcommand found, separate from hard errors.
pub enum Outcome {
    Clean,
    Findings,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::from(EXIT_OK),
        Ok(Outcome::Findings) => ExitCode::from(EXIT_FINDINGS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    match cli.command {
        Command::Validate(args) => commands::validate::run(args, &cfg),
        Command::Associate(args) => commands::associate::run(args, &cfg),
        Command::Evaluate(args) => commands::evaluate::run(args, &cfg),
        Command::Augment(args) => commands::augment::run(args, &cfg),
        Command::Tune(args) => commands::tune::run(args, &cfg),
        Command::Losscheck(args) => commands::losscheck::run(args, &cfg),
        Command::Pipeline(args) => commands::pipeline::run(args, &cfg),
    }
}
