use thiserror::Error;

use crate::solver::ConvergenceReport;
use crate::weights::BalancingWeights;

pub type Result<T> = std::result::Result<T, EbctError>;

#[derive(Debug, Error)]
pub enum EbctError {
    #[error("column `{0}` has zero sample variance")]
    ConstantColumn(String),

    #[error("non-finite value in column `{column}` at unit {unit}")]
    NonFiniteInput { column: String, unit: usize },

    #[error("need at least {required} units for {k} covariates, got {n}")]
    InsufficientUnits { n: usize, k: usize, required: usize },

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("base weights must be finite and strictly positive")]
    InvalidBaseWeights,

    #[error("dual objective is not finite at the current multipliers")]
    NonFiniteDual,

    #[error(
        "solver did not converge after {} iterations (gradient norm {:e})",
        .report.iterations,
        .report.final_gradient_norm
    )]
    NotConverged {
        weights: Box<BalancingWeights>,
        report: ConvergenceReport,
    },

    #[error("balancing constraints appear infeasible (|gamma| = {gamma_norm:e} after {iterations} iterations)")]
    InfeasibleConstraints { gamma_norm: f64, iterations: usize },

    #[error("dual Hessian is singular and no ridge was allowed")]
    SingularHessian,

    #[error("truncation threshold {threshold} is not above 1/n = {}", 1.0 / *.n as f64)]
    ThresholdInfeasible { threshold: f64, n: usize },

    #[error("design matrix is rank deficient")]
    RankDeficientDesign,

    #[error("treatment model fits perfectly (residual scale {sigma:e}); conditional density is degenerate")]
    DegenerateResidual { sigma: f64 },

    #[error("weighted variance is zero")]
    ZeroVariance,

    #[error("dataset has no outcome column")]
    MissingOutcome,

    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),

    #[error("bootstrap exhausted {draws} draws for {replicates} replicates")]
    ResampleDegenerate { draws: usize, replicates: usize },

    #[error("negative base {0} in fractional power")]
    NegativeBase(f64),

    #[error("method `{method}` failed in {failures} of {replications} replications")]
    ScenarioDegenerate {
        method: String,
        failures: usize,
        replications: usize,
    },
}
