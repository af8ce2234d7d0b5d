//! Dose-response estimation: weighted least squares on a polynomial in the
//! treatment, and a unit-level bootstrap for the derivative.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{EbctError, Result};
use crate::linalg::weighted_least_squares;
use crate::rng::stream_rng;
use crate::weighting::Weighter;

pub const DEFAULT_DEGREE: usize = 3;
pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 1000;
/// Two-sided 10% normal critical value.
pub const CRITICAL_VALUE_10PCT: f64 = 1.645;

/// Weighted least squares coefficients. Weights need not be normalized.
pub fn fit_wls(y: &[f64], design: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EbctError::InvalidBaseWeights);
    }
    Ok(weighted_least_squares(design, y, w)?.iter().copied().collect())
}

/// `[1, t, t^2, ..., t^degree]` per row.
pub fn polynomial_design(t: &[f64], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t.len(), degree + 1, |i, j| t[i].powi(j as i32))
}

pub fn polynomial_value(coefficients: &[f64], t: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

pub fn polynomial_derivative(coefficients: &[f64], t: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, c)| acc * t + j as f64 * c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrfFit {
    pub degree: usize,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub grid: Vec<f64>,
    pub drf_values: Vec<f64>,
    pub drf_derivatives: Vec<f64>,
    pub derivative_se: Option<Vec<f64>>,
    pub significant_10pct: Option<Vec<bool>>,
    /// Some grid point lies outside the observed treatment range.
    pub extrapolation: bool,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `points` equally spaced values between the 2nd and 98th percentile of `t`.
pub fn default_grid(t: &[f64], points: usize) -> Result<Vec<f64>> {
    if t.is_empty() || points < 2 {
        return Err(EbctError::InvalidGrid("need data and at least two points".into()));
    }
    let s = sorted(t);
    let lo = quantile(&s, 0.02);
    let hi = quantile(&s, 0.98);
    if !(hi > lo) {
        return Err(EbctError::InvalidGrid("treatment percentiles coincide".into()));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + i as f64 * step).collect())
}

pub fn estimate_drf(dataset: &Dataset, weights: &[f64], degree: usize, grid: &[f64]) -> Result<DrfFit> {
    let y = dataset.outcome().ok_or(EbctError::MissingOutcome)?;
    if degree == 0 {
        return Err(EbctError::InvalidOption("polynomial degree must be >= 1".into()));
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) || grid.iter().any(|g| !g.is_finite()) {
        return Err(EbctError::InvalidGrid("grid must be finite and strictly increasing".into()));
    }
    let t = dataset.treatment();
    let coefficients = fit_wls(y, &polynomial_design(t, degree), weights)?;

    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let extrapolation = grid.iter().any(|&g| g < t_min || g > t_max);

    Ok(DrfFit {
        degree,
        drf_values: grid.iter().map(|&g| polynomial_value(&coefficients, g)).collect(),
        drf_derivatives: grid.iter().map(|&g| polynomial_derivative(&coefficients, g)).collect(),
        coefficients,
        grid: grid.to_vec(),
        derivative_se: None,
        significant_10pct: None,
        extrapolation,
    })
}

/// Replicate statistics from a resampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    /// One vector per replicate, in replicate order.
    pub replicates: Vec<Vec<f64>>,
    /// Resamples drawn, including redraws after failures.
    pub draws: usize,
}

/// Unit-level bootstrap of an arbitrary vector statistic.
///
/// Replicate `b` draws from stream `b` of `seed`; a failing resample is redrawn
/// from the same stream. More than `10 * replicates` total draws aborts with
/// [`EbctError::ResampleDegenerate`].
pub fn bootstrap_statistic<F>(n: usize, replicates: usize, seed: u64, statistic: F) -> Result<BootstrapDraws>
where
    F: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
{
    if replicates < 2 {
        return Err(EbctError::InvalidOption("bootstrap needs at least 2 replicates".into()));
    }
    if n == 0 {
        return Err(EbctError::InvalidOption("cannot resample an empty sample".into()));
    }
    let budget = 10 * replicates;
    // Per-replicate cap so that one replicate can never exceed the total budget.
    let per_replicate_cap = budget - (replicates - 1);

    let outcomes: Vec<(Option<Vec<f64>>, usize)> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let mut indices = vec![0usize; n];
            for attempt in 1..=per_replicate_cap {
                indices.iter_mut().for_each(|i| *i = rng.random_range(0..n));
                if let Ok(stat) = statistic(&indices) {
                    return (Some(stat), attempt);
                }
            }
            (None, per_replicate_cap)
        })
        .collect();

    let draws: usize = outcomes.iter().map(|(_, d)| d).sum();
    if draws > budget || outcomes.iter().any(|(s, _)| s.is_none()) {
        return Err(EbctError::ResampleDegenerate { draws, replicates });
    }
    Ok(BootstrapDraws {
        replicates: outcomes.into_iter().map(|(s, _)| s.unwrap_or_default()).collect(),
        draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignificanceRule {
    /// `|derivative| / se > 1.645`.
    #[default]
    Normal,
    /// The 5th-95th percentile interval of replicate derivatives excludes zero.
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub se: Vec<f64>,
    pub significant: Vec<bool>,
    pub draws: usize,
}

/// Sample standard deviation per coordinate (denominator `B - 1`).
pub fn replicate_sd(replicates: &[Vec<f64>]) -> Vec<f64> {
    let b = replicates.len() as f64;
    let p = replicates.first().map_or(0, Vec::len);
    (0..p)
        .map(|j| {
            let mean = replicates.iter().map(|r| r[j]).sum::<f64>() / b;
            let ss: f64 = replicates.iter().map(|r| (r[j] - mean).powi(2)).sum();
            (ss / (b - 1.0)).sqrt()
        })
        .collect()
}

/// Bootstrap standard errors of the DRF derivative on `grid`. Weights are
/// re-estimated on every resample.
pub fn bootstrap_se(
    dataset: &Dataset,
    weighter: &dyn Weighter,
    degree: usize,
    replicates: usize,
    grid: &[f64],
    seed: u64,
    rule: SignificanceRule,
) -> Result<BootstrapSummary> {
    let point = estimate_drf(dataset, &weighter.weights(dataset)?.weights, degree, grid)?;
    let draws = bootstrap_statistic(dataset.n(), replicates, seed, |indices| {
        let resample = dataset.select_rows(indices);
        let w = weighter.weights(&resample)?;
        Ok(estimate_drf(&resample, &w.weights, degree, grid)?.drf_derivatives)
    })?;
    let se = replicate_sd(&draws.replicates);
    let significant = match rule {
        SignificanceRule::Normal => point
            .drf_derivatives
            .iter()
            .zip(&se)
            .map(|(d, s)| d.abs() > CRITICAL_VALUE_10PCT * s)
            .collect(),
        SignificanceRule::Percentile => (0..grid.len())
            .map(|j| {
                let column: Vec<f64> = draws.replicates.iter().map(|r| r[j]).collect();
                let s = sorted(&column);
                let lo = quantile(&s, 0.05);
                let hi = quantile(&s, 0.95);
                lo > 0.0 || hi < 0.0
            })
            .collect(),
    };
    Ok(BootstrapSummary {
        se,
        significant,
        draws: draws.draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_fit() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = t.iter().map(|t| 2.0 - 0.5 * t).collect();
        let b = fit_wls(&y, &polynomial_design(&t, 1), &[0.2; 5]).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-10 && (b[1] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn two_points_determine_the_line() {
        let b = fit_wls(&[0.0, 1.0], &polynomial_design(&[0.0, 1.0], 1), &[0.9, 0.1]).unwrap();
        assert!(b[0].abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_calculus() {
        let a = [1.5, -2.0, 0.25, 0.75];
        for t in [-2.0, 0.0, 0.3, 4.0] {
            let expected = a[1] + 2.0 * a[2] * t + 3.0 * a[3] * t * t;
            assert!((polynomial_derivative(&a, t) - expected).abs() < 1e-12);
            let value = a[0] + a[1] * t + a[2] * t * t + a[3] * t * t * t;
            assert!((polynomial_value(&a, t) - value).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_between_percentiles() {
        let t: Vec<f64> = (0..=100).map(f64::from).collect();
        let g = default_grid(&t, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[49] - 98.0).abs() < 1e-12);
        assert!(default_grid(&[1.0; 10], 50).is_err());
    }

    #[test]
    fn constant_statistic_has_zero_se() {
        let draws = bootstrap_statistic(10, 20, 1, |_| Ok(vec![3.0])).unwrap();
        assert_eq!(replicate_sd(&draws.replicates), vec![0.0]);
        assert_eq!(draws.draws, 20);
    }

    #[test]
    fn single_replicate_rejected() {
        assert!(matches!(
            bootstrap_statistic(10, 1, 1, |_| Ok(vec![0.0])),
            Err(EbctError::InvalidOption(_))
        ));
    }

    #[test]
    fn always_failing_statistic_aborts() {
        let err = bootstrap_statistic(5, 4, 1, |_| Err(EbctError::ZeroVariance)).unwrap_err();
        assert!(matches!(err, EbctError::ResampleDegenerate { replicates: 4, .. }));
    }

    #[test]
    fn outcome_required() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0], DMatrix::zeros(3, 0), None).unwrap();
        assert!(matches!(
            estimate_drf(&d, &[1.0; 3], 1, &[1.5, 2.0]),
            Err(EbctError::MissingOutcome)
        ));
    }

    #[test]
    fn extrapolation_flagged() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0], DMatrix::zeros(3, 0), Some(vec![1.0, 2.0, 2.5])).unwrap();
        assert!(!estimate_drf(&d, &[1.0; 3], 1, &[1.0, 3.0]).unwrap().extrapolation);
        assert!(estimate_drf(&d, &[1.0; 3], 1, &[1.0, 3.5]).unwrap().extrapolation);
        assert!(estimate_drf(&d, &[1.0; 3], 1, &[2.0, 1.0]).is_err());
    }
}
