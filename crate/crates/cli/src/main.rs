//! `itemetrics` — command-line front end for the item-analysis library.
//!
//! Exit codes: 0 on success (and for --help/--version), 1 for runtime
//! failures (bad inputs, impossible fits), 2 for command-line usage errors.

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{CommonArgs, FitArgs, RunConfig, SelectionArgs};

/// Everything that can go wrong at the command level, each variant carrying
/// enough context to print a single actionable line on stderr.
#[derive(Debug)]
pub enum CliError {
    Core(itemetrics::Error),
    Json(serde_json::Error),
    Csv(csv::Error),
    Invalid(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "serialization: {e}"),
            CliError::Csv(e) => write!(f, "csv output: {e}"),
            CliError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<itemetrics::Error> for CliError {
    fn from(e: itemetrics::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e)
    }
}

#[derive(Parser)]
#[command(
    name = "itemetrics",
    version,
    about = "Item analysis for labeled-response studies: difficulty, \
             clustering, latent-trait fits, population comparison, synthetic \
             data, and respondent screening",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ClusterArgs {
    /// Smallest cluster count to score
    #[arg(long)]
    k_min: Option<usize>,
    /// Largest cluster count to score
    #[arg(long)]
    k_max: Option<usize>,
    /// Seeded restarts per cluster count
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and write a normalized copy of it
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fraction-correct difficulty per item, category, and population
    Difficulty {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectionArgs,
    },
    /// Group items by correlation distance and score the grouping
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectionArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Fit per-item difficulty under the shared-slope latent-trait model
    Irt {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectionArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Compare populations against a reference on three measures
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        select: SelectionArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Population all others are correlated against
        #[arg(long)]
        reference: Option<String>,
        /// Also write per-architecture correlation deltas for this population
        #[arg(long, value_name = "POPULATION")]
        heatmap_group: Option<String>,
    },
    /// Generate a synthetic corpus from a scenario file
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Scenario JSON: items plus populations and/or a worker pool
        #[arg(long, value_name = "FILE")]
        spec: std::path::PathBuf,
    },
    /// Screen respondents in stages: duplicates, scores, justifications
    Screen {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn init_threads(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { common } => {
            let cfg = common.effective()?;
            init_threads(&cfg)?;
            commands::ingest(&cfg)
        }
        Command::Difficulty { common, select } => {
            let mut cfg = common.effective()?;
            select.apply(&mut cfg);
            init_threads(&cfg)?;
            commands::difficulty(&cfg)
        }
        Command::Cluster {
            common,
            select,
            cluster,
        } => {
            let mut cfg = common.effective()?;
            select.apply(&mut cfg);
            if let Some(k_min) = cluster.k_min {
                cfg.k_min = k_min;
            }
            if let Some(k_max) = cluster.k_max {
                cfg.k_max = k_max;
            }
            if let Some(restarts) = cluster.restarts {
                cfg.restarts = restarts;
            }
            init_threads(&cfg)?;
            commands::cluster_cmd(&cfg)
        }
        Command::Irt {
            common,
            select,
            fit,
        } => {
            let mut cfg = common.effective()?;
            select.apply(&mut cfg);
            fit.apply(&mut cfg);
            init_threads(&cfg)?;
            commands::irt_cmd(&cfg)
        }
        Command::Compare {
            common,
            select,
            fit,
            reference,
            heatmap_group,
        } => {
            let mut cfg = common.effective()?;
            select.apply(&mut cfg);
            fit.apply(&mut cfg);
            if reference.is_some() {
                cfg.reference = reference;
            }
            init_threads(&cfg)?;
            commands::compare(&cfg, heatmap_group.as_deref())
        }
        Command::Simulate { common, spec } => {
            let cfg = common.effective()?;
            init_threads(&cfg)?;
            commands::simulate(&cfg, &spec, common.seed)
        }
        Command::Screen { common } => {
            let cfg = common.effective()?;
            init_threads(&cfg)?;
            commands::screen_cmd(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap picks the stream (help -> stdout, errors -> stderr) and
            // the code (0 for help/version, 2 for usage errors).
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
