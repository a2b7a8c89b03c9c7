//! Command-line front end: config files, CSV ingestion and the subcommands
//! `fit`, `bounds`, `scores`, `simulate` and `validate`.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 for
//! data errors, 4 for numerical preconditions.

mod commands;
mod config;
mod io;
mod validate;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{
    bounds_csv, cmd_bounds, cmd_fit, cmd_scores, cmd_simulate, prepare, report_json, scores_csv, ClippingCounts,
    FitReport, Prepared,
};
pub use config::{load_run_config, load_study_config, ColumnMap, CriterionSpec, RunConfig, SCHEMA_VERSION};
pub use io::{read_table, table_csv};
pub use validate::{cmd_validate, CountsTable, MarginCheck, ValidationReport};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ambipolicy", version, about = "Policy learning with partially identified effects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; changes speed only, never results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (stdout when absent). Overrides the config file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the optimal policy and print it with diagnostics as JSON.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-unit bounds as CSV.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-unit scores in both modes as CSV.
    Scores {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo regret study; writes JSON and, next to it, a CSV of records.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the margins of a 2x2 participation-by-instrument counts file.
    Validate { counts: PathBuf },
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(f),
    }
}

fn run_config(cli: &Cli, path: &Path) -> Result<(RunConfig, PathBuf, Option<PathBuf>)> {
    let mut cfg = load_run_config(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let base = config::base_dir(path);
    let output = cli.output.clone().or_else(|| cfg.output.as_ref().map(|o| base.join(o)));
    Ok((cfg, base, output))
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    with_threads(cli.threads, || match &cli.command {
        Command::Fit { config } => {
            let (cfg, base, out) = run_config(cli, config)?;
            io::emit(out.as_deref(), &cmd_fit(&cfg, &base)?.to_json())
        }
        Command::Bounds { config } => {
            let (cfg, base, out) = run_config(cli, config)?;
            io::emit(out.as_deref(), &cmd_bounds(&cfg, &base)?)
        }
        Command::Scores { config } => {
            let (cfg, base, out) = run_config(cli, config)?;
            io::emit(out.as_deref(), &cmd_scores(&cfg, &base)?)
        }
        Command::Simulate { config } => {
            let mut cfg = load_study_config(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = cmd_simulate(&cfg)?;
            io::emit(cli.output.as_deref(), &report_json(&report))?;
            match &cli.output {
                Some(p) => io::emit(Some(&p.with_extension("csv")), &report.records_csv()),
                None => Ok(()),
            }
        }
        Command::Validate { counts } => {
            let report = cmd_validate(counts)?;
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            io::emit(cli.output.as_deref(), &s)
        }
    })
}

/// Parses `args`, runs, reports any error on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
