use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ebct::drf::{SignificanceRule, DEFAULT_BOOTSTRAP_REPS, DEFAULT_DEGREE, DEFAULT_GRID_POINTS};
use ebct::simulation::DEFAULT_REPLICATIONS;
use ebct::MethodTag;

#[derive(Debug, Parser)]
#[command(name = "ebct", version, about = "Covariate balancing weights for continuous treatments")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "EBCT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate weights and report treatment-covariate balance.
    Balance(BalanceArgs),
    /// Estimate a polynomial dose-response function with bootstrap errors.
    Drf(DrfArgs),
    /// Run Monte-Carlo scenarios on simulated data.
    Simulate(SimulateArgs),
}

pub fn parse_method(s: &str) -> Result<MethodTag, String> {
    s.parse().map_err(|e: ebct::EbctError| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long, short)]
    pub input: PathBuf,

    #[arg(long, default_value = "T")]
    pub treatment: String,

    #[arg(long)]
    pub outcome: Option<String>,

    /// Comma-separated covariate columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,

    /// ebct, ipw or uniform.
    #[arg(long, default_value = "ebct", value_parser = parse_method)]
    pub method: MethodTag,

    /// Largest allowed weight share, e.g. 0.04.
    #[arg(long = "truncate")]
    pub truncation_threshold: Option<f64>,

    #[arg(long, short, default_value = ".")]
    pub output_dir: PathBuf,

    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BalanceArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Normal,
    Percentile,
}

impl From<RuleArg> for SignificanceRule {
    fn from(rule: RuleArg) -> Self {
        match rule {
            RuleArg::Normal => SignificanceRule::Normal,
            RuleArg::Percentile => SignificanceRule::Percentile,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DrfArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Polynomial degree of the dose-response function.
    #[arg(long = "degree", default_value_t = DEFAULT_DEGREE)]
    pub drf_degree: usize,

    /// Bootstrap replicates; 0 skips the bootstrap.
    #[arg(long = "bootstrap", default_value_t = DEFAULT_BOOTSTRAP_REPS)]
    pub bootstrap_reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,

    /// How pointwise significance at 10% is decided.
    #[arg(long, value_enum, default_value_t = RuleArg::Normal)]
    pub rule: RuleArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    /// Selection noise scale.
    #[arg(long, default_value_t = 4.0)]
    pub sigma: f64,

    /// Outcome nonlinearity exponent.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,

    /// Covariate specification 1, 2 or 3.
    #[arg(long, default_value_t = 1)]
    pub spec: u8,

    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,

    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "unweighted,ipw,ebct", value_parser = parse_method)]
    pub methods: Vec<MethodTag>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Run all 54 sample-size, specification, selection and nonlinearity cells.
    #[arg(long)]
    pub paper_grid: bool,

    #[arg(long, short, default_value = ".")]
    pub output_dir: PathBuf,

    #[arg(long)]
    pub force: bool,
}
