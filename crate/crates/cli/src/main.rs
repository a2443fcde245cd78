//! `hyperlattice`: orbit dumps, moment reports, series scans and the
//! acceptance suite from the command line.

// `!(x >= 0.0)` style guards deliberately reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use hyperlattice::Error;

use crate::commands::{ProbeMiss, VerifyFailed};
use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hyperlattice", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the orbit ball for each radius and write orbit dumps.
    Enumerate(RunArgs),
    /// Moment reports (JSON and CSV) for each radius.
    Report(RunArgs),
    /// Series scans and residue probes.
    Dirichlet(DirichletArgs),
    /// Run the genus-2 acceptance suite.
    Verify {
        #[arg(long)]
        workers: Option<usize>,
        /// Only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
    /// Print (or write under --out) the serialized group.
    ExportGroup {
        #[arg(long, default_value_t = 2)]
        genus: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    genus: Option<usize>,
    /// Radii, comma separated.
    #[arg(long = "x", value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Base point `re,im`.
    #[arg(long, value_parser = parse_point)]
    z: Option<[f64; 2]>,
    /// Target point `re,im`.
    #[arg(long, value_parser = parse_point)]
    w: Option<[f64; 2]>,
    /// Periods of the form, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    periods: Option<Vec<f64>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DirichletArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Real parts of `s`, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Twist orders `n`, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
}

fn parse_point(text: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re, im] => {
            let re = re.parse::<f64>().map_err(|e| e.to_string())?;
            let im = im.parse::<f64>().map_err(|e| e.to_string())?;
            Ok([re, im])
        }
        _ => Err(format!("expected `re,im`, got {text:?}")),
    }
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            genus: self.genus,
            radii: self.radii.clone(),
            z: self.z,
            w: self.w,
            periods: self.periods.clone(),
            workers: self.workers,
            out: self.out.clone(),
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enumerate(args) => commands::enumerate(args.load()?),
        Command::Report(args) => commands::report(args.load()?).map(|_| ()),
        Command::Dirichlet(args) => {
            let mut cfg = args.run.load()?;
            if let Some(s) = args.s {
                cfg.dirichlet.s = s;
            }
            if let Some(n) = args.n {
                cfg.dirichlet.n = n;
            }
            commands::dirichlet(cfg)
        }
        Command::Verify { workers, only } => {
            let workers = RunConfig::load(
                None,
                &Overrides {
                    workers: Some(workers.unwrap_or(1)),
                    ..Overrides::default()
                },
            )?
            .workers;
            commands::verify(workers, &only)
        }
        Command::ExportGroup { genus, out } => {
            if genus < 2 {
                bail!("genus must be >= 2, got {genus}");
            }
            commands::export_group(genus, out.as_deref())
        }
    }
}

/// 2 element cap, 3 stopping audit, 4 statistics preconditions,
/// 5 extrapolation, 6 probe outside tolerance, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ProbeMiss>().is_some() {
        return 6;
    }
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => 2,
        Some(Error::StoppingAudit(_)) => 3,
        Some(Error::TooFewRecords { .. } | Error::Degenerate(_)) => 4,
        Some(Error::Extrapolation(_)) => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
