//! Observational data model, standardization and the balancing constraint
//! matrix shared by every weighting method.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{EbctError, Result};

/// Units with a continuous treatment intensity, covariates and an optional
/// outcome. Rows are never reordered by any operation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    treatment: Vec<f64>,
    covariates: DMatrix<f64>,
    outcome: Option<Vec<f64>>,
    treatment_name: String,
    covariate_names: Vec<String>,
    outcome_name: Option<String>,
    unit_ids: Vec<String>,
}

impl Dataset {
    /// Builds a dataset with default labels (`T`, `X1..XK`, `Y`) and unit ids
    /// `1..=n`.
    pub fn new(
        treatment: Vec<f64>,
        covariates: DMatrix<f64>,
        outcome: Option<Vec<f64>>,
    ) -> Result<Self> {
        let k = covariates.ncols();
        let n = treatment.len();
        let outcome_name = outcome.as_ref().map(|_| "Y".to_string());
        Self::with_labels(
            treatment,
            covariates,
            outcome,
            "T".to_string(),
            (1..=k).map(|j| format!("X{j}")).collect(),
            outcome_name,
            (1..=n).map(|i| i.to_string()).collect(),
        )
    }

    pub fn with_labels(
        treatment: Vec<f64>,
        covariates: DMatrix<f64>,
        outcome: Option<Vec<f64>>,
        treatment_name: String,
        covariate_names: Vec<String>,
        outcome_name: Option<String>,
        unit_ids: Vec<String>,
    ) -> Result<Self> {
        let n = treatment.len();
        if covariates.nrows() != n && covariates.ncols() > 0 {
            return Err(EbctError::DimensionMismatch(format!(
                "{} treatment values but {} covariate rows",
                n,
                covariates.nrows()
            )));
        }
        // A zero-column matrix may have been built with any row count.
        let covariates = if covariates.ncols() == 0 {
            DMatrix::zeros(n, 0)
        } else {
            covariates
        };
        if covariate_names.len() != covariates.ncols() {
            return Err(EbctError::DimensionMismatch(format!(
                "{} covariate names for {} columns",
                covariate_names.len(),
                covariates.ncols()
            )));
        }
        if unit_ids.len() != n {
            return Err(EbctError::DimensionMismatch(format!(
                "{} unit ids for {} units",
                unit_ids.len(),
                n
            )));
        }
        if let Some(y) = &outcome {
            if y.len() != n {
                return Err(EbctError::DimensionMismatch(format!(
                    "{} outcome values for {} units",
                    y.len(),
                    n
                )));
            }
        }
        if outcome.is_some() != outcome_name.is_some() {
            return Err(EbctError::DimensionMismatch(
                "outcome values and outcome name must be given together".into(),
            ));
        }

        let mut seen = HashSet::new();
        let names = std::iter::once(&treatment_name)
            .chain(covariate_names.iter())
            .chain(outcome_name.iter());
        for name in names {
            if !seen.insert(name.as_str()) {
                return Err(EbctError::DuplicateColumn(name.clone()));
            }
        }

        if let Some(unit) = treatment.iter().position(|v| !v.is_finite()) {
            return Err(EbctError::NonFiniteInput {
                column: treatment_name,
                unit,
            });
        }
        for (j, col) in covariates.column_iter().enumerate() {
            if let Some(unit) = col.iter().position(|v| !v.is_finite()) {
                return Err(EbctError::NonFiniteInput {
                    column: covariate_names[j].clone(),
                    unit,
                });
            }
        }

        Ok(Self {
            treatment,
            covariates,
            outcome,
            treatment_name,
            covariate_names,
            outcome_name,
            unit_ids,
        })
    }

    pub fn n(&self) -> usize {
        self.treatment.len()
    }

    /// Number of covariates `K`.
    pub fn k(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn outcome(&self) -> Option<&[f64]> {
        self.outcome.as_deref()
    }

    pub fn treatment_name(&self) -> &str {
        &self.treatment_name
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn outcome_name(&self) -> Option<&str> {
        self.outcome_name.as_deref()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// Rows picked by `indices` (repeats allowed), keeping labels. Used for
    /// bootstrap resampling.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let treatment = indices.iter().map(|&i| self.treatment[i]).collect();
        let covariates = self.covariates.select_rows(indices);
        let outcome = self
            .outcome
            .as_ref()
            .map(|y| indices.iter().map(|&i| y[i]).collect());
        let unit_ids = indices.iter().map(|&i| self.unit_ids[i].clone()).collect();
        Self {
            treatment,
            covariates,
            outcome,
            treatment_name: self.treatment_name.clone(),
            covariate_names: self.covariate_names.clone(),
            outcome_name: self.outcome_name.clone(),
            unit_ids,
        }
    }

    /// Same units and treatment, different covariate set.
    pub fn with_covariates(&self, covariates: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        Self::with_labels(
            self.treatment.clone(),
            covariates,
            self.outcome.clone(),
            self.treatment_name.clone(),
            names,
            self.outcome_name.clone(),
            self.unit_ids.clone(),
        )
    }
}

/// Centered and unit-variance treatment and covariates, plus the constraint
/// matrix with rows `g_i = [t_i, x_i1..x_iK, t_i*x_i1..t_i*x_iK]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSample {
    t_std: DVector<f64>,
    x_std: DMatrix<f64>,
    t_mean: f64,
    t_scale: f64,
    x_means: Vec<f64>,
    x_scales: Vec<f64>,
    constraint_matrix: DMatrix<f64>,
}

impl StandardizedSample {
    pub fn n(&self) -> usize {
        self.t_std.len()
    }

    pub fn k(&self) -> usize {
        self.x_std.ncols()
    }

    /// Number of balancing constraints, `2K + 1`.
    pub fn n_constraints(&self) -> usize {
        2 * self.k() + 1
    }

    pub fn t_std(&self) -> &DVector<f64> {
        &self.t_std
    }

    pub fn x_std(&self) -> &DMatrix<f64> {
        &self.x_std
    }

    pub fn t_mean(&self) -> f64 {
        self.t_mean
    }

    pub fn t_scale(&self) -> f64 {
        self.t_scale
    }

    pub fn x_means(&self) -> &[f64] {
        &self.x_means
    }

    pub fn x_scales(&self) -> &[f64] {
        &self.x_scales
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.constraint_matrix
    }

    /// Treatment on its original scale.
    pub fn unstandardize_treatment(&self) -> Vec<f64> {
        self.t_std
            .iter()
            .map(|t| t * self.t_scale + self.t_mean)
            .collect()
    }
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Centers every column and scales it to unit sample variance (denominator
/// `n - 1`), then builds the constraint matrix.
///
/// Requires `n >= 2K + 2`: one more unit than there are dual parameters.
pub fn standardize(dataset: &Dataset) -> Result<StandardizedSample> {
    let n = dataset.n();
    let k = dataset.k();
    let required = 2 * k + 2;
    if n < required {
        return Err(EbctError::InsufficientUnits { n, k, required });
    }

    let (t_mean, t_scale) = mean_and_sd(dataset.treatment());
    if !(t_scale > 0.0) {
        return Err(EbctError::ConstantColumn(dataset.treatment_name().to_string()));
    }
    let t_std = DVector::from_iterator(n, dataset.treatment().iter().map(|t| (t - t_mean) / t_scale));

    let mut x_std = dataset.covariates().clone();
    let mut x_means = Vec::with_capacity(k);
    let mut x_scales = Vec::with_capacity(k);
    for (j, mut col) in x_std.column_iter_mut().enumerate() {
        let (mean, sd) = mean_and_sd(col.as_slice());
        // Relative test so that tiny rounding noise on a constant column is
        // still caught.
        if !(sd > 1e-14 * mean.abs().max(f64::MIN_POSITIVE)) {
            return Err(EbctError::ConstantColumn(dataset.covariate_names()[j].clone()));
        }
        col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
        x_means.push(mean);
        x_scales.push(sd);
    }

    let constraint_matrix = build_constraint_matrix(&t_std, &x_std);
    Ok(StandardizedSample {
        t_std,
        x_std,
        t_mean,
        t_scale,
        x_means,
        x_scales,
        constraint_matrix,
    })
}

/// Column order is `[T, X_1..X_K, T*X_1..T*X_K]`.
pub fn build_constraint_matrix(t: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.len();
    let k = x.ncols();
    DMatrix::from_fn(n, 2 * k + 1, |i, j| match j {
        0 => t[i],
        j if j <= k => x[(i, j - 1)],
        j => t[i] * x[(i, j - k - 1)],
    })
}
