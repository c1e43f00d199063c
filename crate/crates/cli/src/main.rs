//! `dlab`: transmission sweeps, Kramers-Kronig phase reconstruction, complex
//! zeros and pulse propagation for a birefringent slab between polarizers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod plot;

use config::{Overrides, RunConfig, POINTS_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] dlab_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use dlab_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Domain(
                E::InvalidGrid(_) | E::InvalidConfig(_) | E::InvalidIndexModel(_) | E::InvalidPulse(_),
            ) => 2,
            Self::Domain(_) | Self::Write { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dlab", version, about = "Causal two-mode birefringent system analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// `key = value` configuration file
    #[arg(long)]
    config: PathBuf,
    /// Analyzer angle in degrees, overriding the file
    #[arg(long = "beta-deg", allow_negative_numbers = true)]
    beta_deg: Option<f64>,
    /// Apply the all-pass correction for upper-half-plane zeros (kk)
    #[arg(long)]
    correct: bool,
    /// CSV destination; `-` writes the CSV to stdout and the report to stderr
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Magnitude, phase and group delay over the band
    Sweep(Common),
    /// Phase reconstructed from magnitude, compared with the model
    Kk(Common),
    /// Complex-frequency zeros of the transfer function
    Zeros(Common),
    /// Pulse propagation, peak timing and front causality
    Pulse(Common),
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

type Action = fn(&RunConfig) -> Result<commands::Output, CliError>;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, action): (Common, Action) =
        match cli.command {
            Command::Sweep(c) => (c, commands::sweep),
            Command::Kk(c) => (c, commands::kk),
            Command::Zeros(c) => (c, commands::zeros),
            Command::Pulse(c) => (c, commands::pulse),
        };
    let overrides = Overrides {
        beta_deg: common.beta_deg,
        correct: common.correct,
        points_env: std::env::var(POINTS_ENV).ok(),
    };
    let run_config = RunConfig::load(&common.config, &overrides)?;
    let output = action(&run_config)?;

    let mut report = output.report;
    match common.out.as_deref() {
        Some(p) if p == Path::new("-") => {
            std::io::stdout()
                .write_all(output.csv.as_bytes())
                .map_err(|source| CliError::Write {
                    path: p.to_path_buf(),
                    source,
                })?;
            eprint!("{report}");
            return Ok(!output.check_failed);
        }
        Some(p) => {
            write_file(p, &output.csv)?;
            let script = plot::script_path(p);
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_file(&script, &plot::script(output.plot, &name))?;
            report.push_str(&format!(
                "csv: {}\nplot script: {}\n",
                p.display(),
                script.display()
            ));
        }
        None => report.push_str("csv: not written (no --out)\n"),
    }
    print!("{report}");
    Ok(!output.check_failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
