//! Monte-Carlo comparison of weighting methods on simulated data with a known
//! unit treatment effect.

pub mod dgp;
mod harness;

pub use dgp::{
    apply_specification, gen_covariates, gen_outcome, gen_treatment, outcome_from_noise,
    treatment_from_noise, Specification, N_COVARIATES, OUTCOME_NOISE_SD, TREATMENT_COEFFICIENTS,
};
pub use harness::{
    bias_rmse_pct, paper_grid, render_scenario_table, run_grid, run_replication,
    run_replication_with, run_scenario, run_scenario_with, simulate_dataset, MethodDraw,
    MethodSummary, ReplicationRecord, ScenarioConfig, ScenarioResult, DEFAULT_REPLICATIONS,
    MAX_FAILURE_SHARE, OUTCOME_NONLINEARITY, SAMPLE_SIZES, SELECTION_SCALES, TRUE_EFFECT,
};
