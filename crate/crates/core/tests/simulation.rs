use ebct::drf::polynomial_design;
use ebct::rng::stream_rng;
use ebct::simulation::*;
use ebct::{fit_wls, MethodTag};
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

const BIG_N: usize = 1_000_000;

fn column_mean(x: &DMatrix<f64>, j: usize) -> f64 {
    x.column(j).sum() / x.nrows() as f64
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

fn column(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

#[test]
fn covariate_moments_at_large_n() {
    let x = gen_covariates(BIG_N, &mut stream_rng(99, 0));
    let phi = Normal::standard();
    let p_low = phi.cdf(-1.0);
    let p_mid = phi.cdf(0.0) - phi.cdf(-1.0);
    let p_high = phi.cdf(1.0) - phi.cdf(0.0);
    // Tolerances are several Monte-Carlo standard errors at n = 1e6.
    assert!((column_mean(&x, 0) - 2.5).abs() < 0.01);
    assert!((column_mean(&x, 1) - 2.0).abs() < 0.01);
    assert!((column_mean(&x, 2) - p_low).abs() < 0.002);
    assert!((column_mean(&x, 3) - p_mid).abs() < 0.002);
    assert!((column_mean(&x, 4) - p_high).abs() < 0.002);
    assert!((column_mean(&x, 5) - 0.5).abs() < 0.002);
    for j in 6..10 {
        let c = column(&x, j);
        assert!(column_mean(&x, j).abs() < 0.005);
        assert!((covariance(&c, &c) - 1.0).abs() < 0.01);
    }
    for (a, b) in [(6, 7), (6, 9), (8, 9)] {
        assert!((covariance(&column(&x, a), &column(&x, b)) - 0.2).abs() < 0.005);
    }
}

/// Var(T) from the covariate distribution, computed term by term.
fn analytic_treatment_variance(sigma: f64) -> f64 {
    let b = TREATMENT_COEFFICIENTS;
    let phi = Normal::standard();
    let p = [phi.cdf(-1.0), phi.cdf(0.0) - phi.cdf(-1.0), phi.cdf(1.0) - phi.cdf(0.0)];
    let mut indicators = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let cov = if i == j { p[i] * (1.0 - p[i]) } else { -p[i] * p[j] };
            indicators += b[2 + i] * b[2 + j] * cov;
        }
    }
    let mut normal_block = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let cov = if i == j { 1.0 } else { 0.2 };
            normal_block += b[6 + i] * b[6 + j] * cov;
        }
    }
    b[0] * b[0] * 25.0 / 12.0 + b[1] * b[1] * 4.0 + indicators + b[5] * b[5] * 0.25 + normal_block + sigma * sigma
}

#[test]
fn treatment_variance_matches_analytic_value() {
    for sigma in SELECTION_SCALES {
        let mut rng = stream_rng(7, 1);
        let x = gen_covariates(BIG_N, &mut rng);
        let t = gen_treatment(&x, sigma, &mut rng).unwrap();
        let expected = analytic_treatment_variance(sigma);
        assert!((covariance(&t, &t) / expected - 1.0).abs() < 0.01);
    }
}

#[test]
fn outcome_slope_identified_given_covariates() {
    let mut rng = stream_rng(8, 0);
    let n = 200_000;
    let x = gen_covariates(n, &mut rng);
    let t = gen_treatment(&x, 4.0, &mut rng).unwrap();
    let y = gen_outcome(&x, &t, 1.0, &mut rng).unwrap();
    let design = DMatrix::from_fn(n, 12, |i, j| match j {
        0 => 1.0,
        1 => t[i],
        j => x[(i, j - 2)],
    });
    let beta = fit_wls(&y, &design, &vec![1.0; n]).unwrap();
    assert!((beta[1] - 1.0).abs() < 0.02, "slope {}", beta[1]);
    // Unadjusted slope is biased upward by confounding.
    let naive = fit_wls(&y, &polynomial_design(&t, 1), &vec![1.0; n]).unwrap();
    assert!(naive[1] > 1.15);
}

#[test]
fn outcome_noise_has_stated_scale() {
    let mut rng = stream_rng(9, 0);
    let n = BIG_N;
    let x = gen_covariates(n, &mut rng);
    let t = vec![0.0; n];
    let y = gen_outcome(&x, &t, 1.0, &mut rng).unwrap();
    let signal = outcome_from_noise(&x, &t, 1.0, &vec![0.0; n]).unwrap();
    let noise: Vec<f64> = y.iter().zip(&signal).map(|(a, b)| a - b).collect();
    assert!((covariance(&noise, &noise).sqrt() / OUTCOME_NOISE_SD - 1.0).abs() < 0.01);
}

fn small_config(n: usize, sigma: f64, eta: f64, spec: Specification, r: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(n, sigma, eta, spec);
    c.replications = r;
    c.master_seed = 2024;
    c
}

#[test]
fn rmse_decomposes_into_bias_and_spread() {
    let result = run_scenario(&small_config(200, 4.0, 1.0, Specification::Correct, 100)).unwrap();
    for m in &result.methods {
        let e = result.estimates(&m.method);
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / e.len() as f64;
        let lhs = m.rmse_pct.powi(2);
        let rhs = m.bias_pct.powi(2) + 1e4 * var;
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        assert_eq!(m.successes + m.failures, 100);
    }
}

#[test]
fn scenario_runs_are_reproducible() {
    let c = small_config(200, 2.0, 1.25, Specification::Mild, 30);
    assert_eq!(run_scenario(&c).unwrap(), run_scenario(&c).unwrap());
    let mut other = c.clone();
    other.master_seed = 2025;
    assert_ne!(run_scenario(&c).unwrap().methods, run_scenario(&other).unwrap().methods);
}

#[test]
fn omitted_variable_specification_increases_bias() {
    let r = 200;
    let correct = run_scenario(&small_config(500, 4.0, 1.0, Specification::Correct, r)).unwrap();
    let strong = run_scenario(&small_config(500, 4.0, 1.0, Specification::Strong, r)).unwrap();
    let ebct = MethodTag::Ebct.as_str();
    assert!(strong.method(ebct).unwrap().bias_pct >= correct.method(ebct).unwrap().bias_pct);
}

#[test]
fn ebct_rmse_shrinks_with_sample_size() {
    let r = 200;
    let ebct = MethodTag::Ebct.as_str();
    let small = run_scenario(&small_config(200, 4.0, 1.0, Specification::Correct, r)).unwrap();
    let large = run_scenario(&small_config(1000, 4.0, 1.0, Specification::Correct, r)).unwrap();
    assert!(large.method(ebct).unwrap().rmse_pct < small.method(ebct).unwrap().rmse_pct);
}

#[test]
fn grid_covers_every_cell_once() {
    let grid = paper_grid(10, &[MethodTag::Ebct], 1);
    assert_eq!(grid.len(), 54);
    let mut keys: Vec<String> = grid
        .iter()
        .map(|c| format!("{}-{}-{}-{}", c.n, c.sigma, c.eta, c.spec.number()))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 54);
    assert!(grid.iter().all(|c| c.validate().is_ok()));
}

#[test]
fn off_grid_configuration_rejected() {
    let c = small_config(300, 4.0, 1.0, Specification::Correct, 10);
    assert!(run_scenario(&c).is_err());
}

/// Fails on every replicate whose first treatment value falls in a band with
/// probability roughly `share`.
struct FlakyWeighter {
    share: f64,
}

impl ebct::Weighter for FlakyWeighter {
    fn label(&self) -> String {
        "flaky".into()
    }

    fn weights(&self, dataset: &ebct::Dataset) -> ebct::Result<ebct::BalancingWeights> {
        let u = Normal::standard().cdf((dataset.treatment()[0] - 6.5) / 4.9);
        if u < self.share {
            return Err(ebct::EbctError::SingularHessian);
        }
        Ok(ebct::BalancingWeights::uniform(dataset.n()))
    }
}

#[test]
fn too_many_failures_make_a_cell_degenerate() {
    let c = small_config(200, 4.0, 1.0, Specification::Correct, 400);
    let bad = FlakyWeighter { share: 0.3 };
    match run_scenario_with(&c, &[&bad]) {
        Err(ebct::EbctError::ScenarioDegenerate { method, failures, replications }) => {
            assert_eq!(method, "flaky");
            assert_eq!(replications, 400);
            assert!(failures > 20);
        }
        other => panic!("expected a degenerate cell, got {other:?}"),
    }
    let rare = FlakyWeighter { share: 0.01 };
    let result = run_scenario_with(&c, &[&rare]).unwrap();
    let m = result.method("flaky").unwrap();
    assert!(m.failures > 0 && m.failures <= 20);
    assert_eq!(m.failures + m.successes, 400);
}
