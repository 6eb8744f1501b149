use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use htsgd_experiments::config::SEED_ENV;
use htsgd_experiments::{run_experiment, ExperimentConfig, ExperimentError, ExperimentKind, Overrides};

/// Run one heavy-tailed SGD experiment and write its CSVs, plots and manifest.
#[derive(Debug, Parser)]
#[command(name = "htsgd", version)]
struct Cli {
    experiment: ExperimentKind,
    /// JSON config; omitted keys keep the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Overrides HTSGD_SEED and the file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_plots: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<PathBuf, ExperimentError> {
    let text = cli.config.as_ref().map(std::fs::read_to_string).transpose()?;
    let env_seed = std::env::var(SEED_ENV).ok();
    let overrides = Overrides { seed: cli.seed, out_dir: cli.out, no_plots: cli.no_plots, threads: cli.threads };
    let cfg = ExperimentConfig::resolve(cli.experiment, text.as_deref(), env_seed.as_deref(), &overrides)?;
    let manifest = run_experiment(&cfg)?;
    for (k, v) in &manifest.summary {
        println!("{k} = {v}");
    }
    Ok(cfg.out_dir.join(htsgd_experiments::MANIFEST_FILE))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(path) => {
            println!("manifest: {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("htsgd: {e}");
            match e {
                ExperimentError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
