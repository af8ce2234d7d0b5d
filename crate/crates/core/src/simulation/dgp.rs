//! Simulated observational data: ten mixed-type covariates, a linear
//! treatment equation with selection noise, and an outcome that is linear in
//! the treatment with unit slope.

use nalgebra::{DMatrix, Matrix4, Vector4};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{EbctError, Result};

pub const N_COVARIATES: usize = 10;

/// Treatment equation coefficients on `X1..X10`.
pub const TREATMENT_COEFFICIENTS: [f64; N_COVARIATES] = [1.0, 0.6, 1.2, 1.0, 0.5, 1.0, 0.8, 0.8, 0.8, 0.8];

/// Standard deviation of the outcome noise.
pub const OUTCOME_NOISE_SD: f64 = 5.0;

/// Pairwise covariance of the jointly normal block `X7..X10`.
pub const NORMAL_BLOCK_COVARIANCE: f64 = 0.2;

fn normal_block_factor() -> Matrix4<f64> {
    let cov = Matrix4::from_fn(|i, j| if i == j { 1.0 } else { NORMAL_BLOCK_COVARIANCE });
    cov.cholesky().expect("block covariance is positive definite").l()
}

/// `X1 ~ U[0,5]`, `X2 ~ chi2(2)`, `X3..X5` indicators of a latent standard
/// normal falling in `(-inf,-1]`, `(-1,0]`, `(0,1]`, `X6 ~ Bernoulli(0.5)`,
/// `X7..X10` standard normal with pairwise covariance 0.2.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let uniform = Uniform::new(0.0, 5.0).expect("valid range");
    let chi2 = ChiSquared::new(2.0).expect("valid degrees of freedom");
    let factor = normal_block_factor();
    let mut x = DMatrix::zeros(n, N_COVARIATES);
    for i in 0..n {
        x[(i, 0)] = uniform.sample(rng);
        x[(i, 1)] = chi2.sample(rng);
        let latent: f64 = rng.sample(StandardNormal);
        x[(i, 2)] = f64::from(u8::from(latent <= -1.0));
        x[(i, 3)] = f64::from(u8::from(latent > -1.0 && latent <= 0.0));
        x[(i, 4)] = f64::from(u8::from(latent > 0.0 && latent <= 1.0));
        x[(i, 5)] = f64::from(u8::from(rng.random_bool(0.5)));
        let z = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let correlated = factor * z;
        for j in 0..4 {
            x[(i, 6 + j)] = correlated[j];
        }
    }
    x
}

fn check_width(x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != N_COVARIATES {
        return Err(EbctError::DimensionMismatch(format!(
            "expected {N_COVARIATES} covariates, got {}",
            x.ncols()
        )));
    }
    Ok(())
}

/// `T = X b + sigma * eps` for given standard normal draws `eps`.
pub fn treatment_from_noise(x: &DMatrix<f64>, sigma: f64, eps: &[f64]) -> Result<Vec<f64>> {
    check_width(x)?;
    if eps.len() != x.nrows() {
        return Err(EbctError::DimensionMismatch("one noise draw per unit".into()));
    }
    Ok((0..x.nrows())
        .map(|i| {
            let index: f64 = (0..N_COVARIATES).map(|j| TREATMENT_COEFFICIENTS[j] * x[(i, j)]).sum();
            index + sigma * eps[i]
        })
        .collect())
}

pub fn gen_treatment<R: Rng + ?Sized>(x: &DMatrix<f64>, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let eps: Vec<f64> = (0..x.nrows()).map(|_| rng.sample(StandardNormal)).collect();
    treatment_from_noise(x, sigma, &eps)
}

/// `Y = (X1 + X2)^eta + X5 + X6 + X7 + T + xi` for given noise `xi`.
pub fn outcome_from_noise(x: &DMatrix<f64>, t: &[f64], eta: f64, xi: &[f64]) -> Result<Vec<f64>> {
    check_width(x)?;
    if t.len() != x.nrows() || xi.len() != x.nrows() {
        return Err(EbctError::DimensionMismatch("one treatment and noise value per unit".into()));
    }
    (0..x.nrows())
        .map(|i| {
            let base = x[(i, 0)] + x[(i, 1)];
            if base < 0.0 {
                return Err(EbctError::NegativeBase(base));
            }
            Ok(base.powf(eta) + x[(i, 4)] + x[(i, 5)] + x[(i, 6)] + t[i] + xi[i])
        })
        .collect()
}

pub fn gen_outcome<R: Rng + ?Sized>(x: &DMatrix<f64>, t: &[f64], eta: f64, rng: &mut R) -> Result<Vec<f64>> {
    let xi: Vec<f64> = (0..x.nrows())
        .map(|_| OUTCOME_NOISE_SD * rng.sample::<f64, _>(StandardNormal))
        .collect();
    outcome_from_noise(x, t, eta, &xi)
}

/// Covariate set used to estimate the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Specification {
    /// All ten covariates as generated.
    Correct,
    /// `X1` replaced by `sqrt(X1)` and `X7` by `X7^2`.
    Mild,
    /// As `Mild`, and `X2` replaced by `X8^2`.
    Strong,
}

impl Specification {
    pub const ALL: [Specification; 3] = [Specification::Correct, Specification::Mild, Specification::Strong];

    pub fn number(self) -> u8 {
        match self {
            Specification::Correct => 1,
            Specification::Mild => 2,
            Specification::Strong => 3,
        }
    }

    pub fn from_number(number: u8) -> Result<Self> {
        match number {
            1 => Ok(Specification::Correct),
            2 => Ok(Specification::Mild),
            3 => Ok(Specification::Strong),
            other => Err(EbctError::InvalidOption(format!("specification must be 1, 2 or 3, got {other}"))),
        }
    }
}

/// Transformed covariates and their labels, in the original column slots.
pub fn apply_specification(x: &DMatrix<f64>, spec: Specification) -> Result<(DMatrix<f64>, Vec<String>)> {
    check_width(x)?;
    let mut out = x.clone();
    let mut names: Vec<String> = (1..=N_COVARIATES).map(|j| format!("X{j}")).collect();
    if spec != Specification::Correct {
        out.column_mut(0).iter_mut().for_each(|v| *v = v.sqrt());
        out.column_mut(6).iter_mut().for_each(|v| *v *= *v);
        names[0] = "sqrt(X1)".into();
        names[6] = "X7^2".into();
    }
    if spec == Specification::Strong {
        for i in 0..x.nrows() {
            out[(i, 1)] = x[(i, 7)] * x[(i, 7)];
        }
        names[1] = "X8^2".into();
    }
    Ok((out, names))
}
