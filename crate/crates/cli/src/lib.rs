//! Command-line front end for `weakcoupled-core`: JSON configuration, the six
//! subcommands, JSON/CSV reports and parallel sweeps.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
//! 4 a property check failed (the report is still written), 1 I/O trouble.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod report;
pub mod tasks;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use weakcoupled_core::Error as CoreError;

pub use config::{Format, RunConfig};
pub use report::Report;
pub use tasks::execute;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property check failed: {0}")]
    Property(String),
    #[error("report schema: {0}")]
    Schema(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn from_core(e: CoreError) -> Self {
        use CoreError::*;
        let msg = e.to_string();
        match e {
            InvalidParameter(_)
            | IndexOutOfRange { .. }
            | BasisMismatch
            | DomainMismatch
            | ShapeMismatch { .. }
            | Precondition(_) => Self::Validation(msg),
            ClassificationContradiction { .. } => Self::Property(msg),
            _ => Self::Solver(msg),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Solver(_) | Self::Schema(_) => 3,
            Self::Property(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// c₀, then the least-energy critical point below it, then classification.
    GroundState,
    /// Deflated search for several sign orbits with energy in (0, c₀).
    Multiplicity,
    /// sup J over Z_m on a λ grid and the bisected λ threshold.
    Thresholds,
    /// S_{∞,λ}, Λ₀ and the minimizer amplitudes of the ℝᴺ limit system.
    Limit,
    /// Roots of h and synchronized pairs (s·w, t·w).
    Synchronized,
    /// Cut-off bubble integrals, order fits, ray maxima, the bound search and
    /// the two elementary inequalities.
    VerifyEstimates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Multiplicity => "multiplicity",
            Command::Thresholds => "thresholds",
            Command::Limit => "limit",
            Command::Synchronized => "synchronized",
            Command::VerifyEstimates => "verify-estimates",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Parser)]
#[command(name = "weakcoupled", version, about = "Variational solver for weakly coupled elliptic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Loads the configuration and applies the command-line overrides.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.solver.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand end to end and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(report) => {
            if report.results.passed() {
                0
            } else {
                for c in report.results.checks.iter().filter(|c| !c.pass) {
                    eprintln!("check {} failed: {}", c.name, c.detail);
                }
                4
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(cli: &Cli) -> Result<Report, CliError> {
    let cfg = resolve_config(&cli.common)?;
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let report = execute(cli.command, &cfg)?;
    let files = output::write_report(&report, cli.command.name())?;
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    for n in &report.results.notes {
        eprintln!("note: {n}");
    }
    Ok(report)
}
