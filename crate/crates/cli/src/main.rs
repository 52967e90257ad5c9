//! `nb-lab`: verification suites, Gram and distance tables, moment tables and
//! Monte-Carlo runs.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Family, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "nb-lab", version, about = "Nyman-Beurling basis laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quadrature tolerance for the family computations
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// First RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// classical, invgamma or recursive
    #[arg(long, global = true)]
    family: Option<String>,
    /// Largest basis size
    #[arg(long, global = true)]
    n_max: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run identity and cross-route checks
    Verify {
        /// specfun, mellin, gram, distance, mc or all
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Write the Gram matrix and right-hand side
    Gram,
    /// Write the distance table and one JSON report per n
    Distance,
    /// Write the moment table and weight samples (recursive family)
    Moments,
    /// Run the Monte-Carlo experiment (invgamma family)
    Mc,
}

fn config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &common.family {
        cfg.family = f.parse::<Family>()?;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(t) = common.tol {
        cfg.tol = Some(t);
    }
    if let Some(s) = common.seed {
        cfg.rng_seed = s;
    }
    if let Some(n) = common.n_max {
        cfg.n_max = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let files = match cli.cmd {
        Cmd::Verify { suite } => return commands::cmd_verify(&suite),
        Cmd::Gram => commands::cmd_gram(&config(&cli.common)?)?,
        Cmd::Distance => commands::cmd_distance(&config(&cli.common)?)?,
        Cmd::Moments => commands::cmd_moments(&config(&cli.common)?)?,
        Cmd::Mc => commands::cmd_mc(&config(&cli.common)?)?,
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nb-lab: {e}");
            ExitCode::from(e.code())
        }
    }
}
