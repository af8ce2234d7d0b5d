//! Stabilized inverse probability weights under a normal treatment model.
//!
//! The generalized propensity score is the conditional normal density of the
//! treatment given covariates from an OLS fit; the stabilizing numerator is the
//! marginal normal density of the treatment.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{EbctError, Result};
use crate::linalg::weighted_least_squares;
use crate::weights::{BalancingWeights, MethodTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsModel {
    /// Intercept followed by one slope per covariate.
    pub beta: Vec<f64>,
    /// Residual standard deviation, denominator `n - K - 1`.
    pub sigma: f64,
    pub marginal_mean: f64,
    /// Sample standard deviation of the treatment, denominator `n - 1`.
    pub marginal_sigma: f64,
}

impl GpsModel {
    pub fn conditional_mean(&self, covariates: &DMatrix<f64>, unit: usize) -> f64 {
        self.beta[0]
            + (0..covariates.ncols())
                .map(|j| self.beta[j + 1] * covariates[(unit, j)])
                .sum::<f64>()
    }
}

pub fn fit_gps(dataset: &Dataset) -> Result<GpsModel> {
    fit_gps_arrays(dataset.treatment(), dataset.covariates())
}

/// OLS of the treatment on `[1 | X]`.
pub fn fit_gps_arrays(treatment: &[f64], covariates: &DMatrix<f64>) -> Result<GpsModel> {
    let n = treatment.len();
    let k = covariates.ncols();
    if covariates.nrows() != n {
        return Err(EbctError::DimensionMismatch(format!(
            "{n} treatment values but {} covariate rows",
            covariates.nrows()
        )));
    }
    if n < k + 2 {
        return Err(EbctError::InsufficientUnits {
            n,
            k,
            required: k + 2,
        });
    }

    let marginal_mean = treatment.iter().sum::<f64>() / n as f64;
    let marginal_ss: f64 = treatment.iter().map(|t| (t - marginal_mean).powi(2)).sum();
    let marginal_sigma = (marginal_ss / (n as f64 - 1.0)).sqrt();
    if !(marginal_sigma > 0.0) {
        return Err(EbctError::ConstantColumn("treatment".into()));
    }

    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { covariates[(i, j - 1)] });
    let beta = weighted_least_squares(&design, treatment, &vec![1.0; n])?;
    let rss: f64 = (0..n)
        .map(|i| {
            let fitted: f64 = design.row(i).iter().zip(beta.iter()).map(|(x, b)| x * b).sum();
            (treatment[i] - fitted).powi(2)
        })
        .sum();
    let sigma = (rss / (n - k - 1) as f64).sqrt();
    if !(sigma >= 1e-12 * marginal_sigma) {
        return Err(EbctError::DegenerateResidual { sigma });
    }

    Ok(GpsModel {
        beta: beta.iter().copied().collect(),
        sigma,
        marginal_mean,
        marginal_sigma,
    })
}

/// Density of `N(mu, sigma^2)` at `t`.
pub fn gps_density(t: f64, mu: f64, sigma: f64) -> f64 {
    log_density(t, mu, sigma).exp()
}

fn log_density(t: f64, mu: f64, sigma: f64) -> f64 {
    let z = (t - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// `f_T(T_i) / f_{T|X}(T_i | X_i)`, normalized to sum to one.
pub fn ipw_weights(dataset: &Dataset) -> Result<BalancingWeights> {
    let model = fit_gps(dataset)?;
    Ok(ipw_weights_from_model(dataset, &model))
}

pub fn ipw_weights_from_model(dataset: &Dataset, model: &GpsModel) -> BalancingWeights {
    let x = dataset.covariates();
    let log_ratio: Vec<f64> = dataset
        .treatment()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            log_density(t, model.marginal_mean, model.marginal_sigma)
                - log_density(t, model.conditional_mean(x, i), model.sigma)
        })
        .collect();
    let shift = log_ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_ratio.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let n = weights.len();
    BalancingWeights {
        weights,
        base_weights: vec![1.0 / n as f64; n],
        gamma: Vec::new(),
        converged: true,
        iterations: 0,
        final_gradient_norm: 0.0,
        method_tag: MethodTag::Ipw,
    }
}
