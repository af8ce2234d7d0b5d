use crate::data::StandardizedSample;
use crate::error::{EbctError, Result};
use crate::weights::{normalize, BalancingWeights};

use super::{solve, SolverOptions};

pub const DEFAULT_TRUNCATION_ROUNDS: usize = 500;

const THRESHOLD_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationOutcome {
    pub weights: BalancingWeights,
    pub rounds: usize,
    /// False when `max_rounds` ran out with some weight still above the
    /// threshold.
    pub within_threshold: bool,
}

/// Caps weights at `threshold`, renormalizes, and re-solves with the capped
/// weights as base weights until no weight exceeds the threshold.
pub fn truncate_and_rebalance(
    sample: &StandardizedSample,
    weights: &BalancingWeights,
    threshold: f64,
    max_rounds: usize,
    options: &SolverOptions,
) -> Result<TruncationOutcome> {
    let n = sample.n();
    if weights.len() != n {
        return Err(EbctError::DimensionMismatch(format!(
            "{} weights for {} units",
            weights.len(),
            n
        )));
    }
    if !threshold.is_finite() || threshold > 1.0 {
        return Err(EbctError::InvalidOption(format!(
            "truncation threshold {threshold} must be in (1/n, 1]"
        )));
    }
    if threshold <= 1.0 / n as f64 {
        return Err(EbctError::ThresholdInfeasible { threshold, n });
    }

    let mut current = weights.clone();
    let mut rounds = 0;
    while current.max_weight() > threshold + THRESHOLD_SLACK {
        if rounds == max_rounds {
            return Ok(TruncationOutcome {
                weights: current,
                rounds,
                within_threshold: false,
            });
        }
        // Weights that underflowed to zero are floored so the next base stays
        // strictly positive; the floor is far below any representable share.
        let capped: Vec<f64> = current
            .weights
            .iter()
            .map(|w| w.min(threshold).max(f64::MIN_POSITIVE))
            .collect();
        let base = normalize(&capped)?;
        let (next, _) = solve(sample, Some(&base), options)?;
        current = next;
        rounds += 1;
    }
    Ok(TruncationOutcome {
        weights: current,
        rounds,
        within_threshold: true,
    })
}
