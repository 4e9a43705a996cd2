//! `pointer-basis`: batch runs of the decoherence model from a JSON config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::Overrides;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),
    #[error("invalid model: {0}")]
    ModelInvalid(String),
    #[error(transparent)]
    Core(#[from] pointer_basis::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse(_) => 2,
            CliError::ModelInvalid(_) => 3,
            CliError::Core(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pointer-basis", version, about = "Discrete levels coupled to a continuum: spectrum, decoherence and readout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decay rates, level shifts and discrete Liouvillian eigenvalues.
    Spectrum(Common),
    /// Populations, pointer atoms and coherences over the time grid.
    Evolve(Common),
    /// Perturbative prediction against exact diagonalization.
    Compare(Common),
    /// Pointer readout of a premeasured superposition.
    Measure(MeasureArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of continuum nodes.
    #[arg(long)]
    grid_m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[command(flatten)]
    common: Common,
    /// Premeasurement amplitudes as JSON, e.g. `[[0.6, 0], [0, 0.8]]`.
    #[arg(long)]
    amplitudes: Option<String>,
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        out: c.out.clone(),
        grid_m: c.grid_m,
        seed: c.seed,
        amplitudes: None,
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Spectrum(c) => commands::spectrum(&config::load(&c.config, &overrides(&c))?),
        Command::Evolve(c) => commands::evolve(&config::load(&c.config, &overrides(&c))?),
        Command::Compare(c) => commands::compare(&config::load(&c.config, &overrides(&c))?),
        Command::Measure(m) => {
            let mut o = overrides(&m.common);
            if let Some(text) = &m.amplitudes {
                let a: Vec<[f64; 2]> = serde_json::from_str(text)
                    .map_err(|e| CliError::ConfigParse(format!("--amplitudes: {e}")))?;
                o.amplitudes = Some(a);
            }
            commands::measure(&config::load(&m.common.config, &o)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
