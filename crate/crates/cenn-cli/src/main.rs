//! `cenn` — train cellular neural network templates, quantize their
//! coefficients to powers of two, and estimate what the resulting
//! shift-based hardware costs.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or
//! malformed data, 3 numerical failure.

mod artifacts;
mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cenn::error::CennError;

#[derive(Debug, Parser)]
#[command(name = "cenn", version, about, disable_help_subcommand = true)]
pub struct Cli {
    /// Master seed; every randomized stage derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON settings file; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic training pairs and a task manifest.
    SynthData(commands::SynthArgs),
    /// Train a float template on a task's image pairs.
    Train(commands::TrainArgs),
    /// Quantize a trained template, sweeping strategy/batch/range
    /// combinations.
    Quantize(commands::QuantizeArgs),
    /// Simulate a template on a task's inputs.
    Run(commands::RunArgs),
    /// Simulate on the 18-bit shift-based fixed-point datapath.
    FixedRun(commands::FixedRunArgs),
    /// Template structure statistics and shifter cycle schedules.
    Analyze(commands::AnalyzeArgs),
    /// Project stage capacity onto an FPGA resource budget.
    Project(commands::ProjectArgs),
    /// Operation counts and measured software throughput.
    Bench(commands::BenchArgs),
}

fn exit_code(err: &CennError) -> u8 {
    match err {
        CennError::Io(_)
        | CennError::Json(_)
        | CennError::PgmFormat(_)
        | CennError::InvalidManifest(_)
        | CennError::DimensionMismatch { .. }
        | CennError::EmptyGrid => 2,
        CennError::Diverged { .. } | CennError::NonFinite { .. } | CennError::Overflow { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
