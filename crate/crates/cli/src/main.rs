//! `chargeplan` command-line tool.
//!
//! Exit codes: 0 success, 1 internal solver failure, 2 config or input
//! error, 3 infeasible instance, 4 ADMM did not converge.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ReportFormat;

#[derive(Parser, Debug)]
#[command(name = "chargeplan", version, about = "Charging capacity and assignment planning")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the generator seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (default: `output.dir` of the config, else `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Build an instance from a trip CSV.
    Ingest {
        trips: PathBuf,
    },
    /// Solve an instance.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Centralized)]
        method: MethodArg,
    },
    /// Solve the joint problem for a list of assignment ranges.
    #[command(name = "sweep-r")]
    SweepR {
        instance: PathBuf,
        /// Comma-separated ranges in km (default: `sweep.ranges`).
        #[arg(long, value_delimiter = ',')]
        ranges: Option<Vec<f64>>,
        /// Solve the ranges in parallel.
        #[arg(long)]
        parallel: bool,
    },
    /// Export a solved plan as GeoJSON or CSV.
    Report {
        solution: PathBuf,
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: Option<ReportFormat>,
        /// Slot window `START:END` (half-open) for assignment totals.
        #[arg(long, value_parser = parse_window)]
        slots: Option<(usize, usize)>,
    },
    /// Solve with all three methods and report the gaps.
    Compare {
        instance: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub locations: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
    /// Assignment range in km.
    #[arg(long, conflicts_with = "assignable_fraction")]
    pub range: Option<f64>,
    /// Picks the range so that this share of ordered pairs is assignable.
    #[arg(long)]
    pub assignable_fraction: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Centralized,
    Admm,
    Base,
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chargeplan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
