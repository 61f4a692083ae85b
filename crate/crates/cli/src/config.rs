//! Effective run configuration: defaults, JSON config files, and flag
//! overrides (flags win). The merged config is echoed into every output
//! directory so a run can be reproduced from its artifacts alone.

use std::fs;
use std::path::{Path, PathBuf};

use itemetrics::cluster::{DEFAULT_K_MAX, DEFAULT_RESTARTS};
use itemetrics::irt::RaschConfig;
use itemetrics::rng::derive_seed_str;
use itemetrics::stats::PValueSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Serialization format for tabular outputs. Fixed-schema sidecars (pair
/// files, role files, review queues) always stay CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Which p-value accompanies reported correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PMethodChoice {
    /// Student-t approximation (fast, classical).
    TApprox,
    /// Exhaustive permutation test; needs n ≤ 8.
    ExactPerm,
    /// Seeded Monte Carlo permutation test.
    MonteCarlo,
}

/// Every knob a run can turn, with a default for each. A JSON file with any
/// subset of these fields seeds the config; command-line flags override
/// field by field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Item table (CSV or JSON, by extension).
    pub items: Option<PathBuf>,
    /// Response table (CSV or JSON, by extension).
    pub responses: Option<PathBuf>,
    /// Reference population for comparison reports.
    pub reference: Option<String>,
    /// Populations to analyze; empty means every population in the data.
    pub populations: Vec<String>,
    /// Restrict the analyzed slice to one architecture tag.
    pub architecture: Option<String>,

    // Latent-trait fit settings.
    pub n_quad: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub estimate_shared_a: bool,

    // Clustering settings.
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,

    // Significance settings.
    pub p_method: PMethodChoice,
    pub mc_samples: usize,

    pub seed: u64,
    pub format: OutputFormat,
    pub out: PathBuf,
    /// Upper bound on worker threads; 0 keeps the library default. Never
    /// affects results, so the echoed configuration omits it: outputs stay
    /// byte-identical across thread counts.
    #[serde(skip_serializing)]
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let rasch = RaschConfig::<f64>::default();
        RunConfig {
            items: None,
            responses: None,
            reference: None,
            populations: Vec::new(),
            architecture: None,
            n_quad: rasch.n_quad,
            tol: rasch.tol,
            max_iter: rasch.max_iter,
            estimate_shared_a: rasch.estimate_shared_a,
            k_min: 2,
            k_max: DEFAULT_K_MAX,
            restarts: DEFAULT_RESTARTS,
            p_method: PMethodChoice::TApprox,
            mc_samples: 10_000,
            seed: 0,
            format: OutputFormat::Csv,
            out: PathBuf::from("out"),
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Defaults, optionally overlaid with a JSON config file.
    pub fn load(config_path: Option<&Path>) -> Result<Self, CliError> {
        match config_path {
            None => Ok(RunConfig::default()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))
            }
        }
    }

    pub fn rasch_config(&self) -> RaschConfig<f64> {
        RaschConfig {
            n_quad: self.n_quad,
            tol: self.tol,
            max_iter: self.max_iter,
            estimate_shared_a: self.estimate_shared_a,
        }
    }

    /// The p-value request, seeded independently of data seeds.
    pub fn p_spec(&self) -> PValueSpec {
        match self.p_method {
            PMethodChoice::TApprox => PValueSpec::TApprox,
            PMethodChoice::ExactPerm => PValueSpec::ExactPerm,
            PMethodChoice::MonteCarlo => PValueSpec::MonteCarloPerm {
                samples: self.mc_samples,
                seed: derive_seed_str(self.seed, "permutation"),
            },
        }
    }
}

/// Flags shared by every subcommand; each one overrides the matching
/// config-file field when present.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; explicit flags take precedence over its fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Item table (CSV or JSON, by extension)
    #[arg(long, value_name = "FILE")]
    pub items: Option<PathBuf>,
    /// Response table (CSV or JSON, by extension)
    #[arg(long, value_name = "FILE")]
    pub responses: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed for all stochastic behavior
    #[arg(long)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads (0 = library default)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Format for tabular outputs
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// P-value method for reported correlations
    #[arg(long, value_enum)]
    pub p_method: Option<PMethodChoice>,
    /// Sample count for the Monte Carlo p-method
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

impl CommonArgs {
    /// Config file (or defaults) overlaid with these flags.
    pub fn effective(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        clone_over(&mut cfg.items, &self.items);
        clone_over(&mut cfg.responses, &self.responses);
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        copy_over(&mut cfg.seed, &self.seed);
        copy_over(&mut cfg.threads, &self.threads);
        copy_over(&mut cfg.format, &self.format);
        copy_over(&mut cfg.p_method, &self.p_method);
        copy_over(&mut cfg.mc_samples, &self.mc_samples);
        Ok(cfg)
    }
}

/// Analysis-selection flags shared by the per-population subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct SelectionArgs {
    /// Population to include (repeatable; default: all in the data)
    #[arg(long = "population", value_name = "TAG")]
    pub populations: Vec<String>,
    /// Restrict to respondents with this architecture tag
    #[arg(long, value_name = "TAG")]
    pub architecture: Option<String>,
}

impl SelectionArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if !self.populations.is_empty() {
            cfg.populations = self.populations.clone();
        }
        clone_over(&mut cfg.architecture, &self.architecture);
    }
}

/// Latent-trait fit flags.
#[derive(Debug, Clone, clap::Args)]
pub struct FitArgs {
    /// Quadrature node count for the latent-trait fit
    #[arg(long)]
    pub n_quad: Option<usize>,
    /// Log-likelihood convergence tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap for the fit
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Whether the shared discrimination is estimated (true) or fixed at 1
    #[arg(long, value_name = "BOOL")]
    pub estimate_shared_a: Option<bool>,
}

impl FitArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        copy_over(&mut cfg.n_quad, &self.n_quad);
        copy_over(&mut cfg.tol, &self.tol);
        copy_over(&mut cfg.max_iter, &self.max_iter);
        copy_over(&mut cfg.estimate_shared_a, &self.estimate_shared_a);
    }
}

fn copy_over<T: Copy>(dst: &mut T, src: &Option<T>) {
    if let Some(v) = src {
        *dst = *v;
    }
}

fn clone_over<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
    if src.is_some() {
        *dst = src.clone();
    }
}
