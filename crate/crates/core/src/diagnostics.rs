//! Balance diagnostics: weighted treatment-covariate correlations and weight
//! concentration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{EbctError, Result};

const MIN_VARIANCE: f64 = 1e-24;

/// Weighted Pearson correlation. `w` is assumed normalized.
pub fn weighted_pearson(w: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if w.len() != a.len() || a.len() != b.len() {
        return Err(EbctError::DimensionMismatch(format!(
            "lengths {}, {}, {}",
            w.len(),
            a.len(),
            b.len()
        )));
    }
    let mean_a: f64 = w.iter().zip(a).map(|(w, a)| w * a).sum();
    let mean_b: f64 = w.iter().zip(b).map(|(w, b)| w * b).sum();
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for i in 0..w.len() {
        let da = a[i] - mean_a;
        let db = b[i] - mean_b;
        cov += w[i] * da * db;
        var_a += w[i] * da * da;
        var_b += w[i] * db * db;
    }
    if var_a < MIN_VARIANCE || var_b < MIN_VARIANCE {
        return Err(EbctError::ZeroVariance);
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

pub fn max_weight_share(w: &[f64]) -> f64 {
    w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub covariate_names: Vec<String>,
    /// `None` where a column had zero weighted variance.
    pub per_covariate_correlation: Vec<Option<f64>>,
    pub max_abs_correlation: f64,
    pub mean_abs_correlation: f64,
    pub max_weight_share: f64,
    pub method_tag: String,
    /// Columns excluded from the aggregates.
    pub zero_variance_columns: Vec<String>,
}

impl BalanceReport {
    /// Aggregates precomputed correlations.
    pub fn from_correlations(
        covariate_names: Vec<String>,
        correlations: Vec<Option<f64>>,
        max_weight_share: f64,
        method_tag: impl Into<String>,
    ) -> Self {
        let valid: Vec<f64> = correlations.iter().flatten().map(|c| c.abs()).collect();
        let max_abs_correlation = valid.iter().copied().fold(0.0, f64::max);
        let mean_abs_correlation = if valid.is_empty() {
            0.0
        } else {
            valid.iter().sum::<f64>() / valid.len() as f64
        };
        let zero_variance_columns = covariate_names
            .iter()
            .zip(&correlations)
            .filter(|(_, c)| c.is_none())
            .map(|(n, _)| n.clone())
            .collect();
        Self {
            covariate_names,
            per_covariate_correlation: correlations,
            max_abs_correlation,
            mean_abs_correlation,
            max_weight_share,
            method_tag: method_tag.into(),
            zero_variance_columns,
        }
    }

    pub fn has_warnings(&self) -> bool {
        !self.zero_variance_columns.is_empty()
    }
}

/// Weighted correlation of the treatment with every covariate of `dataset`.
pub fn balance_report(w: &[f64], dataset: &Dataset, method_tag: &str) -> Result<BalanceReport> {
    if w.len() != dataset.n() {
        return Err(EbctError::DimensionMismatch(format!(
            "{} weights for {} units",
            w.len(),
            dataset.n()
        )));
    }
    let t = dataset.treatment();
    let x = dataset.covariates();
    let mut correlations = Vec::with_capacity(dataset.k());
    for j in 0..dataset.k() {
        let column: Vec<f64> = x.column(j).iter().copied().collect();
        match weighted_pearson(w, t, &column) {
            Ok(c) => correlations.push(Some(c)),
            Err(EbctError::ZeroVariance) => correlations.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(BalanceReport::from_correlations(
        dataset.covariate_names().to_vec(),
        correlations,
        max_weight_share(w),
        method_tag,
    ))
}

/// Two decimals; values that round to zero print without a sign.
pub fn format_2dp(value: f64) -> String {
    let s = format!("{value:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn cell(value: Option<f64>) -> String {
    value.map(format_2dp).unwrap_or_else(|| "n/a".to_string())
}

/// Fixed-width table with one correlation column per report, followed by the
/// mean absolute correlation and the largest weight in percent. All reports
/// must cover the same covariates.
pub fn render_balance_table(treatment_name: &str, reports: &[&BalanceReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let label_width = first
        .covariate_names
        .iter()
        .map(|n| n.len())
        .chain(["Mean absolute correlation".len(), "Covariate".len()])
        .max()
        .unwrap_or(0);
    let col_width = reports.iter().map(|r| r.method_tag.len()).max().unwrap_or(0).max(8);

    let mut out = String::new();
    let _ = writeln!(out, "(Weighted) Corr({treatment_name}, X_k)");
    let _ = write!(out, "{:<label_width$}", "Covariate");
    for r in reports {
        let _ = write!(out, "  {:>col_width$}", r.method_tag);
    }
    out.push('\n');
    for (j, name) in first.covariate_names.iter().enumerate() {
        let _ = write!(out, "{name:<label_width$}");
        for r in reports {
            let _ = write!(out, "  {:>col_width$}", cell(r.per_covariate_correlation[j]));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<label_width$}", "Mean absolute correlation");
    for r in reports {
        let _ = write!(out, "  {:>col_width$}", format_2dp(r.mean_abs_correlation));
    }
    out.push('\n');
    let _ = write!(out, "{:<label_width$}", "Maximum weight in %");
    for r in reports {
        let _ = write!(out, "  {:>col_width$}", format_2dp(100.0 * r.max_weight_share));
    }
    out.push('\n');
    out
}
