use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kiparc_cli::{logger, run, RunOptions, Scenario};
use log::LevelFilter;

/// Parametric converter workbench: runs a named scenario from a JSON
/// config and writes CSV tables plus a manifest.json with SHA-256 digests.
#[derive(Debug, Parser)]
#[command(name = "kiparc", version)]
struct Cli {
    /// Scenario to run
    #[arg(value_enum)]
    scenario: Scenario,

    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides the config's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for measurement noise (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,

    /// Replace existing output files
    #[arg(long)]
    force: bool,

    /// Only report warnings and errors
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logger::init(if cli.quiet { LevelFilter::Warn } else { LevelFilter::Info });
    let options = RunOptions {
        scenario: cli.scenario,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        force: cli.force,
    };
    match run(&options) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
