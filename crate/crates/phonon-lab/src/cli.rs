//! Command-line front end: `phonon-lab design|reproduce|sweep`.
//!
//! Exit codes: 0 success, 2 physics/invariant failure, 64 usage error,
//! 65 config parse error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::pipeline;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PHYSICS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

/// Environment variable overriding the output directory (lower priority
/// than `--out`).
pub const OUT_DIR_ENV: &str = "PHONON_LAB_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "phonon-lab",
    about = "Bulk acoustic phonon / optical cavity modeling and measurement pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML); defaults to the built-in
    /// reference-experiment preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the noise seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Output directory; overrides config and the PHONON_LAB_OUT
    /// environment variable.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the geometry/cavity/coupling design report as JSON.
    Design {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a measurement-reproduction pipeline end to end.
    Reproduce {
        /// Which pipeline: fig2 (transparency/amplification linewidths)
        /// or fig3 (sideband cooling thermometry).
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate scalar observables over a Cartesian parameter grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::from_path(path)?,
        None => ScenarioConfig::paper_default(),
    };
    if let Some(seed) = common.seed {
        config.synth.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = Some(out.clone());
    } else if config.output_dir.is_none() {
        if let Ok(env_dir) = std::env::var(OUT_DIR_ENV) {
            config.output_dir = Some(PathBuf::from(env_dir));
        }
    }
    Ok(config)
}

fn out_dir(config: &ScenarioConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("phonon-lab-out"))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design { common } => {
            let config = load_config(&common)?;
            let report = pipeline::run_design(&config)?;
            let dir = out_dir(&config);
            pipeline::write_json(&dir.join("design.json"), &report)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| Error::Invalid(format!("serialize: {e}")))?
            );
            Ok(())
        }
        Command::Reproduce { figure, common } => {
            let config = load_config(&common)?;
            let dir = out_dir(&config);
            match figure {
                Figure::Fig2 => {
                    let report = pipeline::run_fig2(&config, Some(&dir))?;
                    println!(
                        "gamma0 = {:.3} Hz, P1 = {:.4e} W, g0 = {:.4} Hz",
                        report.regression.gamma0,
                        report.regression.power_at_unity_c,
                        report.g0_hz
                    );
                }
                Figure::Fig3 => {
                    let report = pipeline::run_fig3(&config, Some(&dir))?;
                    println!(
                        "final occupation: {:.4} (linewidth), {:.4} (area)",
                        report.final_occupation_linewidth, report.final_occupation_area
                    );
                }
            }
            println!("outputs written to {}", dir.display());
            Ok(())
        }
        Command::Sweep { common } => {
            let config = load_config(&common)?;
            let rows = pipeline::run_sweep(&config, common.jobs)?;
            let dir = out_dir(&config);
            std::fs::create_dir_all(&dir)?;
            let mut csv = Vec::new();
            pipeline::write_sweep_csv(&config, &rows, &mut csv)?;
            std::fs::write(dir.join("sweep.csv"), &csv)?;
            print!("{}", String::from_utf8_lossy(&csv));
            Ok(())
        }
    }
}

fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Usage(_) => EXIT_USAGE,
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_PHYSICS,
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version paths exit 0; everything else is
            // a usage error.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
