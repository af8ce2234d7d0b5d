//! A common interface over the weighting methods so the bootstrap and the
//! simulation harness can run any of them.

use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset};
use crate::error::{EbctError, Result};
use crate::ipw::ipw_weights;
use crate::solver::{solve, truncate_and_rebalance, SolverOptions, DEFAULT_TRUNCATION_ROUNDS};
use crate::weights::{BalancingWeights, MethodTag};

/// Anything that turns a dataset into normalized unit weights.
pub trait Weighter: Sync {
    fn label(&self) -> String;
    fn weights(&self, dataset: &Dataset) -> Result<BalancingWeights>;
}

/// One of the built-in methods plus its tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingMethod {
    pub tag: MethodTag,
    /// Cap for EBCT truncate-and-rebalance, or for IPW weights.
    pub truncation: Option<f64>,
    pub truncation_rounds: usize,
    pub solver: SolverOptions,
}

impl WeightingMethod {
    pub fn new(tag: MethodTag) -> Self {
        Self {
            tag,
            truncation: None,
            truncation_rounds: DEFAULT_TRUNCATION_ROUNDS,
            solver: SolverOptions::default(),
        }
    }

    pub fn with_truncation(mut self, threshold: f64) -> Self {
        self.truncation = Some(threshold);
        self
    }
}

impl Weighter for WeightingMethod {
    fn label(&self) -> String {
        match self.tag {
            MethodTag::Uniform => "unweighted".to_string(),
            tag => tag.as_str().to_string(),
        }
    }

    fn weights(&self, dataset: &Dataset) -> Result<BalancingWeights> {
        match self.tag {
            MethodTag::Uniform => Ok(BalancingWeights::uniform(dataset.n())),
            MethodTag::Ipw => {
                let mut w = ipw_weights(dataset)?;
                if let Some(cap) = self.truncation {
                    w.weights = cap_weights(&w.weights, cap)?;
                }
                Ok(w)
            }
            MethodTag::Ebct => {
                let sample = standardize(dataset)?;
                let (w, _) = solve(&sample, None, &self.solver)?;
                match self.truncation {
                    Some(threshold) => Ok(truncate_and_rebalance(
                        &sample,
                        &w,
                        threshold,
                        self.truncation_rounds,
                        &self.solver,
                    )?
                    .weights),
                    None => Ok(w),
                }
            }
        }
    }
}

/// Largest normalized weights with no share above `cap`: capped units sit at
/// `cap` and the rest keep their relative sizes. No rebalancing.
fn cap_weights(weights: &[f64], cap: f64) -> Result<Vec<f64>> {
    let n = weights.len();
    if !(cap > 1.0 / n as f64) {
        return Err(EbctError::ThresholdInfeasible { threshold: cap, n });
    }
    let mut capped = vec![false; n];
    loop {
        let fixed = capped.iter().filter(|c| **c).count() as f64 * cap;
        let free: f64 = weights.iter().zip(&capped).filter(|(_, c)| !**c).map(|(w, _)| w).sum();
        let scale = (1.0 - fixed) / free;
        let mut changed = false;
        for (w, c) in weights.iter().zip(capped.iter_mut()) {
            if !*c && w * scale > cap {
                *c = true;
                changed = true;
            }
        }
        if !changed {
            return Ok(weights
                .iter()
                .zip(&capped)
                .map(|(w, c)| if *c { cap } else { w * scale })
                .collect());
        }
    }
}
