use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::diagnostics::{balance_report, max_weight_share};
use crate::drf::{fit_wls, polynomial_design};
use crate::error::{EbctError, Result};
use crate::rng::stream_rng;
use crate::weighting::{Weighter, WeightingMethod};
use crate::weights::MethodTag;

use super::dgp::{apply_specification, gen_covariates, gen_outcome, gen_treatment, Specification};

pub const SAMPLE_SIZES: [usize; 3] = [200, 500, 1000];
/// Moderate selection first, as in the result tables.
pub const SELECTION_SCALES: [f64; 2] = [4.0, 2.0];
pub const OUTCOME_NONLINEARITY: [f64; 3] = [1.0, 1.25, 1.5];
pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const TRUE_EFFECT: f64 = 1.0;
/// Share of failed replications above which a scenario is rejected.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub sigma: f64,
    pub eta: f64,
    pub spec: Specification,
    pub replications: usize,
    pub methods: Vec<MethodTag>,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn new(n: usize, sigma: f64, eta: f64, spec: Specification) -> Self {
        Self {
            n,
            sigma,
            eta,
            spec,
            replications: DEFAULT_REPLICATIONS,
            methods: vec![MethodTag::Uniform, MethodTag::Ipw, MethodTag::Ebct],
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !SAMPLE_SIZES.contains(&self.n) {
            return Err(EbctError::InvalidOption(format!("n must be one of {SAMPLE_SIZES:?}")));
        }
        if !SELECTION_SCALES.contains(&self.sigma) {
            return Err(EbctError::InvalidOption(format!("sigma must be one of {SELECTION_SCALES:?}")));
        }
        if !OUTCOME_NONLINEARITY.contains(&self.eta) {
            return Err(EbctError::InvalidOption(format!("eta must be one of {OUTCOME_NONLINEARITY:?}")));
        }
        if self.replications == 0 {
            return Err(EbctError::InvalidOption("replications must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(EbctError::InvalidOption("at least one method is required".into()));
        }
        Ok(())
    }

    fn weighters(&self) -> Vec<WeightingMethod> {
        let unique: Vec<MethodTag> = self
            .methods
            .iter()
            .enumerate()
            .filter(|(i, m)| !self.methods[..*i].contains(m))
            .map(|(_, m)| *m)
            .collect();
        unique.into_iter().map(WeightingMethod::new).collect()
    }
}

/// One method's result on one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDraw {
    pub method: String,
    pub estimate: Option<f64>,
    pub max_abs_correlation: Option<f64>,
    pub max_weight_share: Option<f64>,
    pub failure: Option<String>,
}

impl MethodDraw {
    fn failed(method: String, err: &EbctError) -> Self {
        Self {
            method,
            estimate: None,
            max_abs_correlation: None,
            max_weight_share: None,
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub draws: Vec<MethodDraw>,
}

/// One draw of the data for replicate `index` of `config`.
pub fn simulate_dataset(config: &ScenarioConfig, index: usize) -> Result<Dataset> {
    let mut rng = stream_rng(config.master_seed, index as u64);
    let x = gen_covariates(config.n, &mut rng);
    let t = gen_treatment(&x, config.sigma, &mut rng)?;
    let y = gen_outcome(&x, &t, config.eta, &mut rng)?;
    let (weighting_x, names) = apply_specification(&x, config.spec)?;
    Dataset::with_labels(
        t,
        weighting_x,
        Some(y),
        "T".into(),
        names,
        Some("Y".into()),
        (1..=config.n).map(|i| i.to_string()).collect(),
    )
}

fn evaluate_method(dataset: &Dataset, weighter: &dyn Weighter) -> MethodDraw {
    let label = weighter.label();
    let run = || -> Result<MethodDraw> {
        let w = weighter.weights(dataset)?;
        let y = dataset.outcome().ok_or(EbctError::MissingOutcome)?;
        let coefficients = fit_wls(y, &polynomial_design(dataset.treatment(), 1), &w.weights)?;
        let report = balance_report(&w.weights, dataset, &label)?;
        Ok(MethodDraw {
            method: label.clone(),
            estimate: Some(coefficients[1]),
            max_abs_correlation: Some(report.max_abs_correlation),
            max_weight_share: Some(max_weight_share(&w.weights)),
            failure: None,
        })
    };
    run().unwrap_or_else(|e| MethodDraw::failed(label.clone(), &e))
}

pub fn run_replication(config: &ScenarioConfig, index: usize) -> Result<ReplicationRecord> {
    let weighters = config.weighters();
    let refs: Vec<&dyn Weighter> = weighters.iter().map(|w| w as &dyn Weighter).collect();
    run_replication_with(config, index, &refs)
}

/// Simulates one dataset and applies every weighter to it. Method failures
/// are recorded, not propagated.
pub fn run_replication_with(
    config: &ScenarioConfig,
    index: usize,
    weighters: &[&dyn Weighter],
) -> Result<ReplicationRecord> {
    let dataset = simulate_dataset(config, index)?;
    Ok(ReplicationRecord {
        index,
        draws: weighters.iter().map(|w| evaluate_method(&dataset, *w)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// `|mean(estimate) - 1| * 100`.
    pub bias_pct: f64,
    /// `sqrt(mean((estimate - 1)^2)) * 100`.
    pub rmse_pct: f64,
    pub mean_max_abs_correlation: f64,
    pub mean_max_weight_share: f64,
    pub failures: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub methods: Vec<MethodSummary>,
    pub replicates: Vec<ReplicationRecord>,
}

impl ScenarioResult {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label)
    }

    /// Successful per-replicate estimates of one method, in replicate order.
    pub fn estimates(&self, label: &str) -> Vec<f64> {
        self.replicates
            .iter()
            .flat_map(|r| r.draws.iter().filter(|d| d.method == label).filter_map(|d| d.estimate))
            .collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Bias and RMSE in percent of the true effect.
pub fn bias_rmse_pct(estimates: &[f64]) -> (f64, f64) {
    let bias = (mean(estimates.iter().copied()) - TRUE_EFFECT).abs() * 100.0;
    let rmse = mean(estimates.iter().map(|e| (e - TRUE_EFFECT).powi(2))).sqrt() * 100.0;
    (bias, rmse)
}

fn summarize(label: &str, replicates: &[ReplicationRecord]) -> MethodSummary {
    let draws: Vec<&MethodDraw> = replicates
        .iter()
        .flat_map(|r| r.draws.iter().filter(|d| d.method == label))
        .collect();
    let estimates: Vec<f64> = draws.iter().filter_map(|d| d.estimate).collect();
    let (bias_pct, rmse_pct) = bias_rmse_pct(&estimates);
    MethodSummary {
        method: label.to_string(),
        bias_pct,
        rmse_pct,
        mean_max_abs_correlation: mean(draws.iter().filter_map(|d| d.max_abs_correlation)),
        mean_max_weight_share: mean(draws.iter().filter_map(|d| d.max_weight_share)),
        failures: draws.iter().filter(|d| d.failure.is_some()).count(),
        successes: estimates.len(),
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let weighters = config.weighters();
    let refs: Vec<&dyn Weighter> = weighters.iter().map(|w| w as &dyn Weighter).collect();
    run_scenario_with(config, &refs)
}

/// Runs all replications in parallel and reduces them in replicate order.
pub fn run_scenario_with(config: &ScenarioConfig, weighters: &[&dyn Weighter]) -> Result<ScenarioResult> {
    config.validate()?;
    let replicates: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|i| run_replication_with(config, i, weighters))
        .collect::<Result<_>>()?;

    let methods: Vec<MethodSummary> = weighters
        .iter()
        .map(|w| summarize(&w.label(), &replicates))
        .collect();
    for m in &methods {
        if m.failures as f64 > MAX_FAILURE_SHARE * config.replications as f64 {
            return Err(EbctError::ScenarioDegenerate {
                method: m.method.clone(),
                failures: m.failures,
                replications: config.replications,
            });
        }
    }
    Ok(ScenarioResult {
        config: config.clone(),
        methods,
        replicates,
    })
}

/// Every cell of the result tables: sample size, then specification, then
/// selection scale, then outcome nonlinearity.
pub fn paper_grid(replications: usize, methods: &[MethodTag], master_seed: u64) -> Vec<ScenarioConfig> {
    let mut configs = Vec::with_capacity(54);
    for &n in &SAMPLE_SIZES {
        for spec in Specification::ALL {
            for &sigma in &SELECTION_SCALES {
                for &eta in &OUTCOME_NONLINEARITY {
                    configs.push(ScenarioConfig {
                        n,
                        sigma,
                        eta,
                        spec,
                        replications,
                        methods: methods.to_vec(),
                        master_seed,
                    });
                }
            }
        }
    }
    configs
}

/// Runs cells one after another; each cell parallelizes over replications.
pub fn run_grid(configs: &[ScenarioConfig]) -> Vec<Result<ScenarioResult>> {
    configs.iter().map(run_scenario).collect()
}

fn find<'a>(
    results: &'a [&ScenarioResult],
    n: usize,
    spec: Specification,
    sigma: f64,
    eta: f64,
) -> Option<&'a ScenarioResult> {
    results.iter().copied().find(|r| {
        r.config.n == n && r.config.spec == spec && r.config.sigma == sigma && r.config.eta == eta
    })
}

fn display_name(label: &str) -> String {
    match label {
        "unweighted" => "Unweighted".into(),
        "ipw" => "IPW".into(),
        "ebct" => "EBCT".into(),
        other => other.to_string(),
    }
}

/// Bias / RMSE table per sample size: one column pair per (sigma, eta) cell,
/// one row block per specification, unweighted results on top.
pub fn render_scenario_table(results: &[&ScenarioResult]) -> String {
    let mut out = String::new();
    let sizes: BTreeSet<usize> = results.iter().map(|r| r.config.n).collect();
    let cells: Vec<(f64, f64)> = SELECTION_SCALES
        .iter()
        .flat_map(|&s| OUTCOME_NONLINEARITY.iter().map(move |&e| (s, e)))
        .collect();
    let label_width = 22;

    for n in sizes {
        let _ = writeln!(out, "Bias and RMSE in percent of the true effect (N = {n})");
        let _ = write!(out, "{:<label_width$}", "");
        for (s, e) in &cells {
            let _ = write!(out, " {:>13}", format!("s={s} eta={e}"));
        }
        out.push('\n');
        let _ = write!(out, "{:<label_width$}", "");
        for _ in &cells {
            let _ = write!(out, " {:>6} {:>6}", "Bias", "RMSE");
        }
        out.push('\n');

        let row = |out: &mut String, title: &str, label: &str, spec: Specification| {
            let _ = write!(out, "{title:<label_width$}");
            for &(s, e) in &cells {
                match find(results, n, spec, s, e).and_then(|r| r.method(label)) {
                    Some(m) => {
                        let _ = write!(out, " {:>6.1} {:>6.1}", m.bias_pct, m.rmse_pct);
                    }
                    None => {
                        let _ = write!(out, " {:>6} {:>6}", "-", "-");
                    }
                }
            }
            out.push('\n');
        };

        // Unweighted estimates do not depend on the specification; take the
        // first specification present.
        let mut labels: Vec<String> = Vec::new();
        for r in results.iter().filter(|r| r.config.n == n) {
            for m in &r.methods {
                if !labels.contains(&m.method) {
                    labels.push(m.method.clone());
                }
            }
        }
        let specs: BTreeSet<Specification> = results
            .iter()
            .filter(|r| r.config.n == n)
            .map(|r| r.config.spec)
            .collect();
        if labels.iter().any(|l| l == "unweighted") {
            if let Some(&spec) = specs.iter().next() {
                row(&mut out, "  Unweighted", "unweighted", spec);
            }
        }
        for spec in specs {
            let _ = writeln!(out, "Specification {}", spec.number());
            for label in labels.iter().filter(|l| *l != "unweighted") {
                row(&mut out, &format!("  {}", display_name(label)), label, spec);
            }
        }
        out.push('\n');
    }
    out
}
