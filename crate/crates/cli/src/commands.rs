use std::path::Path;

use ebct::diagnostics::{format_2dp, render_balance_table};
use ebct::drf::{default_grid, SignificanceRule};
use ebct::simulation::{paper_grid, render_scenario_table, run_grid, ScenarioConfig, ScenarioResult, Specification};
use ebct::{
    balance_report, bootstrap_se, estimate_drf, solve, standardize, truncate_and_rebalance, BalanceReport,
    BalancingWeights, Dataset, EbctError, MethodTag, Weighter, WeightingMethod,
};
use serde::Serialize;

use crate::args::{BalanceArgs, DataArgs, DrfArgs, SimulateArgs};
use crate::error::{CliError, Result, EXIT_DEGENERATE, EXIT_NOT_CONVERGED, EXIT_OK};
use crate::io::{read_csv, write_weights, ColumnRoles, OutputSet};

pub const WEIGHTS_FILE: &str = "weights.csv";
pub const BALANCE_JSON: &str = "balance_report.json";
pub const BALANCE_TABLE: &str = "balance_table.txt";
pub const DRF_FILE: &str = "drf.csv";
pub const DRF_JSON: &str = "drf.json";
pub const SCENARIOS_FILE: &str = "scenarios.csv";
pub const SCENARIOS_TABLE: &str = "scenarios.txt";
pub const SCENARIOS_JSON: &str = "scenarios.json";
pub const REPLICATES_FILE: &str = "replicates.csv";

#[derive(Debug, Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
}

impl Metadata {
    fn new(command: &'static str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
        }
    }
}

fn load(data: &DataArgs) -> Result<Dataset> {
    let roles = ColumnRoles {
        treatment: data.treatment.clone(),
        outcome: data.outcome.clone(),
        covariates: data.covariates.clone(),
    };
    read_csv(&data.input, &roles)
}

fn method_for(data: &DataArgs) -> WeightingMethod {
    let method = WeightingMethod::new(data.method);
    match data.truncation_threshold {
        Some(t) => method.with_truncation(t),
        None => method,
    }
}

/// Weights plus everything needed to describe how they were reached.
#[derive(Debug, Clone, Serialize)]
struct WeightingRun {
    #[serde(skip)]
    weights: BalancingWeights,
    method: String,
    converged: bool,
    iterations: usize,
    final_gradient_norm: f64,
    truncation_threshold: Option<f64>,
    truncation_rounds: Option<usize>,
    within_threshold: Option<bool>,
}

impl WeightingRun {
    fn ok(&self) -> bool {
        self.converged && self.within_threshold != Some(false)
    }
}

/// Like [`Weighter::weights`] but keeps non-converged EBCT weights so they
/// can still be written out.
fn estimate_weights(dataset: &Dataset, method: &WeightingMethod) -> Result<WeightingRun> {
    let label = method.label();
    if method.tag != MethodTag::Ebct {
        let weights = method.weights(dataset)?;
        return Ok(WeightingRun {
            method: label,
            converged: true,
            iterations: 0,
            final_gradient_norm: 0.0,
            truncation_threshold: method.truncation,
            truncation_rounds: None,
            within_threshold: None,
            weights,
        });
    }
    let sample = standardize(dataset)?;
    let unconverged = |w: BalancingWeights, threshold, rounds| WeightingRun {
        method: label.clone(),
        converged: false,
        iterations: w.iterations,
        final_gradient_norm: w.final_gradient_norm,
        truncation_threshold: threshold,
        truncation_rounds: rounds,
        within_threshold: None,
        weights: w,
    };
    let (w, _) = match solve(&sample, None, &method.solver) {
        Ok(v) => v,
        Err(EbctError::NotConverged { weights, .. }) => return Ok(unconverged(*weights, None, None)),
        Err(e) => return Err(e.into()),
    };
    let Some(threshold) = method.truncation else {
        return Ok(WeightingRun {
            method: label,
            converged: true,
            iterations: w.iterations,
            final_gradient_norm: w.final_gradient_norm,
            truncation_threshold: None,
            truncation_rounds: None,
            within_threshold: None,
            weights: w,
        });
    };
    match truncate_and_rebalance(&sample, &w, threshold, method.truncation_rounds, &method.solver) {
        Ok(out) => Ok(WeightingRun {
            method: label,
            converged: true,
            iterations: out.weights.iterations,
            final_gradient_norm: out.weights.final_gradient_norm,
            truncation_threshold: Some(threshold),
            truncation_rounds: Some(out.rounds),
            within_threshold: Some(out.within_threshold),
            weights: out.weights,
        }),
        Err(EbctError::NotConverged { weights, .. }) => Ok(unconverged(*weights, Some(threshold), None)),
        Err(e) => Err(e.into()),
    }
}

fn warn_unfinished(run: &WeightingRun) {
    if !run.converged {
        eprintln!(
            "warning: weights did not converge (gradient norm {:e}); outputs written anyway",
            run.final_gradient_norm
        );
    } else if run.within_threshold == Some(false) {
        eprintln!(
            "warning: truncation stopped after {} rounds with max weight {} above {}",
            run.truncation_rounds.unwrap_or(0),
            run.weights.max_weight(),
            run.truncation_threshold.unwrap_or(f64::NAN)
        );
    }
}

#[derive(Debug, Serialize)]
struct BalanceOutput<'a> {
    metadata: Metadata,
    input: &'a Path,
    weighting: &'a WeightingRun,
    unweighted: &'a BalanceReport,
    weighted: &'a BalanceReport,
}

pub fn cmd_balance(args: &BalanceArgs) -> Result<i32> {
    let data = &args.data;
    let outputs = OutputSet::prepare(&data.output_dir, &[WEIGHTS_FILE, BALANCE_JSON, BALANCE_TABLE], data.force)?;
    let dataset = load(data)?;
    let run = estimate_weights(&dataset, &method_for(data))?;

    let n = dataset.n();
    let unweighted = balance_report(&vec![1.0 / n as f64; n], &dataset, "unweighted")?;
    let weighted = balance_report(&run.weights.weights, &dataset, &run.method)?;
    let table = render_balance_table(dataset.treatment_name(), &[&unweighted, &weighted]);

    write_weights(&outputs.path(WEIGHTS_FILE), dataset.unit_ids(), &run.weights.weights)?;
    outputs.write_json(
        BALANCE_JSON,
        &BalanceOutput {
            metadata: Metadata::new("balance"),
            input: &data.input,
            weighting: &run,
            unweighted: &unweighted,
            weighted: &weighted,
        },
    )?;
    outputs.write_text(BALANCE_TABLE, &table)?;
    print!("{table}");
    for col in &weighted.zero_variance_columns {
        eprintln!("warning: column {col} has zero weighted variance; excluded from the aggregates");
    }

    warn_unfinished(&run);
    Ok(if run.ok() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Debug, Serialize)]
struct DrfOutput<'a> {
    metadata: Metadata,
    input: &'a Path,
    weighting: &'a WeightingRun,
    degree: usize,
    bootstrap_reps: usize,
    bootstrap_draws: Option<usize>,
    seed: u64,
    rule: SignificanceRule,
    grid_min: f64,
    grid_max: f64,
    coefficients: &'a [f64],
    extrapolation: bool,
}

pub fn cmd_drf(args: &DrfArgs) -> Result<i32> {
    let data = &args.data;
    let outputs = OutputSet::prepare(&data.output_dir, &[DRF_FILE, DRF_JSON], data.force)?;
    let dataset = load(data)?;
    if dataset.outcome().is_none() {
        return Err(CliError::Usage("drf needs an outcome column (--outcome)".into()));
    }
    let method = method_for(data);
    let run = estimate_weights(&dataset, &method)?;
    let grid = default_grid(dataset.treatment(), args.grid_points)?;
    let fit = estimate_drf(&dataset, &run.weights.weights, args.drf_degree, &grid)?;
    let rule = SignificanceRule::from(args.rule);

    // The bootstrap re-estimates weights per resample, which is only
    // meaningful once the full-sample weights are sound.
    let summary = if args.bootstrap_reps > 0 && run.ok() {
        Some(bootstrap_se(
            &dataset,
            &method,
            args.drf_degree,
            args.bootstrap_reps,
            &grid,
            args.seed,
            rule,
        )?)
    } else {
        None
    };

    let path = outputs.path(DRF_FILE);
    let mut writer = csv::Writer::from_path(&path).map_err(|e| CliError::csv(&path, e))?;
    writer
        .write_record(["t", "drf", "derivative", "se", "significant"])
        .map_err(|e| CliError::csv(&path, e))?;
    for j in 0..grid.len() {
        let (se, sig) = match &summary {
            Some(s) => (s.se[j].to_string(), s.significant[j].to_string()),
            None => (String::new(), String::new()),
        };
        writer
            .write_record([
                grid[j].to_string(),
                fit.drf_values[j].to_string(),
                fit.drf_derivatives[j].to_string(),
                se,
                sig,
            ])
            .map_err(|e| CliError::csv(&path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(&path, e))?;

    let grid_min = grid.first().copied().unwrap_or(f64::NAN);
    let grid_max = grid.last().copied().unwrap_or(f64::NAN);
    outputs.write_json(
        DRF_JSON,
        &DrfOutput {
            metadata: Metadata::new("drf"),
            input: &data.input,
            weighting: &run,
            degree: args.drf_degree,
            bootstrap_reps: args.bootstrap_reps,
            bootstrap_draws: summary.as_ref().map(|s| s.draws),
            seed: args.seed,
            rule,
            grid_min,
            grid_max,
            coefficients: &fit.coefficients,
            extrapolation: fit.extrapolation,
        },
    )?;
    println!(
        "grid: {} points from {} to {}",
        grid.len(),
        format_2dp(grid_min),
        format_2dp(grid_max)
    );
    if args.bootstrap_reps > 0 && summary.is_none() {
        eprintln!("warning: bootstrap skipped because the full-sample weights are not sound");
    }
    warn_unfinished(&run);
    Ok(if run.ok() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn simulate_configs(args: &SimulateArgs) -> Result<Vec<ScenarioConfig>> {
    if args.methods.is_empty() {
        return Err(CliError::Usage("--methods must name at least one method".into()));
    }
    let configs = if args.paper_grid {
        paper_grid(args.replications, &args.methods, args.seed)
    } else {
        vec![ScenarioConfig {
            n: args.n,
            sigma: args.sigma,
            eta: args.eta,
            spec: Specification::from_number(args.spec)?,
            replications: args.replications,
            methods: args.methods.clone(),
            master_seed: args.seed,
        }]
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

#[derive(Debug, Serialize)]
struct SimulateOutput<'a> {
    metadata: Metadata,
    seed: u64,
    replications: usize,
    methods: &'a [MethodTag],
    cells: usize,
    degenerate_cells: Vec<String>,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::csv(path, e)
}

fn write_scenarios(path: &Path, results: &[&ScenarioResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "n",
        "sigma",
        "eta",
        "spec",
        "method",
        "bias_pct",
        "rmse_pct",
        "mean_max_abs_corr",
        "mean_max_weight_share",
        "failures",
    ])
    .map_err(csv_err(path))?;
    for r in results {
        let c = &r.config;
        for m in &r.methods {
            w.write_record([
                c.n.to_string(),
                c.sigma.to_string(),
                c.eta.to_string(),
                c.spec.number().to_string(),
                m.method.clone(),
                m.bias_pct.to_string(),
                m.rmse_pct.to_string(),
                m.mean_max_abs_correlation.to_string(),
                m.mean_max_weight_share.to_string(),
                m.failures.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-replicate metrics, the raw material for estimate and balance
/// distribution plots.
fn write_replicates(path: &Path, results: &[&ScenarioResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "n",
        "sigma",
        "eta",
        "spec",
        "replicate",
        "method",
        "estimate",
        "max_abs_corr",
        "max_weight_share",
        "failure",
    ])
    .map_err(csv_err(path))?;
    for r in results {
        let c = &r.config;
        for rec in &r.replicates {
            for d in &rec.draws {
                w.write_record([
                    c.n.to_string(),
                    c.sigma.to_string(),
                    c.eta.to_string(),
                    c.spec.number().to_string(),
                    rec.index.to_string(),
                    d.method.clone(),
                    optional(d.estimate),
                    optional(d.max_abs_correlation),
                    optional(d.max_weight_share),
                    d.failure.clone().unwrap_or_default(),
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let outputs = OutputSet::prepare(
        &args.output_dir,
        &[SCENARIOS_FILE, SCENARIOS_TABLE, SCENARIOS_JSON, REPLICATES_FILE],
        args.force,
    )?;
    let configs = simulate_configs(args)?;
    let mut done = Vec::new();
    let mut degenerate = Vec::new();
    for (config, result) in configs.iter().zip(run_grid(&configs)) {
        match result {
            Ok(r) => done.push(r),
            Err(e @ EbctError::ScenarioDegenerate { .. }) => {
                let cell = format!(
                    "n={} sigma={} eta={} spec={}",
                    config.n,
                    config.sigma,
                    config.eta,
                    config.spec.number()
                );
                eprintln!("error: {cell}: {e}");
                degenerate.push(cell);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let done: Vec<&ScenarioResult> = done.iter().collect();

    write_scenarios(&outputs.path(SCENARIOS_FILE), &done)?;
    write_replicates(&outputs.path(REPLICATES_FILE), &done)?;
    let table = render_scenario_table(&done);
    outputs.write_text(SCENARIOS_TABLE, &table)?;
    outputs.write_json(
        SCENARIOS_JSON,
        &SimulateOutput {
            metadata: Metadata::new("simulate"),
            seed: args.seed,
            replications: args.replications,
            methods: &args.methods,
            cells: configs.len(),
            degenerate_cells: degenerate.clone(),
        },
    )?;
    print!("{table}");
    Ok(if degenerate.is_empty() { EXIT_OK } else { EXIT_DEGENERATE })
}
