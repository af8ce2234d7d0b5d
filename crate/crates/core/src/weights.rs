use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EbctError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Ebct,
    Ipw,
    Uniform,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Ebct => "ebct",
            MethodTag::Ipw => "ipw",
            MethodTag::Uniform => "uniform",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = EbctError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebct" => Ok(MethodTag::Ebct),
            "ipw" => Ok(MethodTag::Ipw),
            "uniform" | "unweighted" => Ok(MethodTag::Uniform),
            other => Err(EbctError::InvalidOption(format!("unknown method `{other}`"))),
        }
    }
}

/// Normalized unit weights together with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancingWeights {
    pub weights: Vec<f64>,
    /// Reference weights `q` the entropy divergence is measured from.
    pub base_weights: Vec<f64>,
    /// Dual multipliers; empty for non-EBCT methods.
    pub gamma: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub method_tag: MethodTag,
}

impl BalancingWeights {
    pub fn uniform(n: usize) -> Self {
        let w = vec![1.0 / n as f64; n];
        Self {
            weights: w.clone(),
            base_weights: w,
            gamma: Vec::new(),
            converged: true,
            iterations: 0,
            final_gradient_norm: 0.0,
            method_tag: MethodTag::Uniform,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rescales positive finite values to sum to one.
pub(crate) fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(EbctError::InvalidBaseWeights);
    }
    let total: f64 = values.iter().sum();
    Ok(values.iter().map(|v| v / total).collect())
}
