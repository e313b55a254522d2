//! Workbench front end: configuration, scenarios, dataset loading and
//! artifact export for the kiparc models.

pub mod config;
pub mod dataset;
pub mod error;
pub mod logger;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

pub use config::{load_config, parse_config, Config, Plan, Scenario};
pub use dataset::load_dataset;
pub use error::{CliError, CliResult};
pub use output::{export_artifacts, Artifact, RunManifest};

/// Seed used when neither the command line nor the config gives one.
pub const DEFAULT_SEED: u64 = 0;

/// Everything a run needs besides the config file contents.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: Scenario,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub force: bool,
}

/// Loads the config, runs the scenario and exports its artifacts.
///
/// The command-line seed and output directory take precedence over the
/// config's. A config `output_dir` is relative to the config file; the
/// default is `kiparc-<scenario>` in the working directory.
pub fn run(options: &RunOptions) -> CliResult<RunManifest> {
    let config = load_config(&options.config, options.scenario)?;
    let seed = options.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let out_dir = match (&options.out, &config.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => options
            .config
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(dir),
        (None, None) => PathBuf::from(format!("kiparc-{}", options.scenario)),
    };
    log::info!("running {} (seed {seed}) into {}", options.scenario, out_dir.display());
    let artifacts = scenarios::run_plan(&config.plan, seed)?;
    let manifest = RunManifest::new(options.scenario.name(), seed, config.echo);
    let manifest = export_artifacts(&artifacts, &out_dir, options.force, manifest)?;
    for f in &manifest.files {
        log::info!("wrote {} ({} bytes)", f.name, f.bytes);
    }
    Ok(manifest)
}
