//! Entropy balancing for continuous treatments.
//!
//! Weights minimize `sum_i w_i ln(w_i / q_i)` subject to `sum_i w_i g_i = 0`
//! and `sum_i w_i = 1`, where `g_i` are the rows of the constraint matrix of a
//! [`StandardizedSample`]. The problem is solved through its unconstrained
//! convex dual with a damped Newton method.

mod dual;
mod truncate;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::StandardizedSample;
use crate::error::{EbctError, Result};
use crate::weights::{normalize, BalancingWeights, MethodTag};

pub use dual::{dual_gradient, dual_hessian, dual_objective, recover_weights};
pub use truncate::{truncate_and_rebalance, TruncationOutcome, DEFAULT_TRUNCATION_ROUNDS};

/// Multipliers beyond this norm are taken as evidence that no positive weight
/// vector satisfies the constraints.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

const MIN_STEP: f64 = 1e-20;
const MAX_RIDGE: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Infinity-norm of the dual gradient at which the solve stops.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Added to the Hessian diagonal before factorization.
    pub ridge: f64,
    pub line_search_shrink: f64,
    pub armijo_c: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            max_iterations: 200,
            ridge: 1e-9,
            line_search_shrink: 0.5,
            armijo_c: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(EbctError::InvalidOption("gradient_tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(EbctError::InvalidOption("max_iterations must be >= 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(EbctError::InvalidOption("ridge must be >= 0".into()));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(EbctError::InvalidOption("line_search_shrink must be in (0, 1)".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(EbctError::InvalidOption("armijo_c must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    /// Dual value at the start point and after every accepted step.
    pub dual_value_trace: Vec<f64>,
    pub final_gradient_norm: f64,
}

/// Solves for EBCT weights on a standardized sample. `base_weights` defaults
/// to uniform `1/n`.
pub fn solve(
    sample: &StandardizedSample,
    base_weights: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<(BalancingWeights, ConvergenceReport)> {
    solve_constraints(sample.constraint_matrix(), base_weights, options)
}

/// Same as [`solve`] but on an arbitrary constraint matrix whose weighted
/// column means are driven to zero.
pub fn solve_constraints(
    g: &DMatrix<f64>,
    base_weights: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<(BalancingWeights, ConvergenceReport)> {
    options.validate()?;
    let n = g.nrows();
    let p = g.ncols();
    if n == 0 {
        return Err(EbctError::DimensionMismatch("empty constraint matrix".into()));
    }
    let q = match base_weights {
        Some(q) if q.len() != n => {
            return Err(EbctError::DimensionMismatch(format!(
                "{} base weights for {} units",
                q.len(),
                n
            )))
        }
        Some(q) => normalize(q)?,
        None => vec![1.0 / n as f64; n],
    };

    let mut gamma = DVector::zeros(p);
    let mut state = dual::evaluate(&gamma, g, &q)?;
    let mut trace = vec![state.value];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let grad_norm = state.gradient.amax();
        if grad_norm <= options.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        let hessian = dual::hessian_at(&state, g);
        let direction = newton_direction(&hessian, &state.gradient, options.ridge)?;
        let slope = state.gradient.dot(&direction);
        if !(slope < 0.0) {
            break;
        }

        // Once the predicted decrease is at rounding level the dual value can
        // no longer rank candidates; the gradient norm takes over as merit.
        let at_rounding_floor = -slope <= 1e3 * f64::EPSILON * state.value.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let candidate = &gamma + step * &direction;
            if let Ok(next) = dual::evaluate(&candidate, g, &q) {
                let sufficient = if at_rounding_floor {
                    next.gradient.amax() < grad_norm
                } else {
                    next.value <= state.value + options.armijo_c * step * slope
                };
                if sufficient {
                    accepted = Some((candidate, next));
                    break;
                }
            }
            step *= options.line_search_shrink;
        }
        let Some((candidate, next)) = accepted else {
            // No descent possible at machine precision.
            break;
        };
        iterations += 1;
        gamma = candidate;
        state = next;
        trace.push(state.value);

        let gamma_norm = gamma.norm();
        if gamma_norm > DIVERGENCE_LIMIT {
            return Err(EbctError::InfeasibleConstraints {
                gamma_norm,
                iterations,
            });
        }
    }

    let final_gradient_norm = state.gradient.amax();
    let report = ConvergenceReport {
        converged,
        iterations,
        dual_value_trace: trace,
        final_gradient_norm,
    };
    let weights = BalancingWeights {
        weights: state.weights.iter().copied().collect(),
        base_weights: q,
        gamma: gamma.iter().copied().collect(),
        converged,
        iterations,
        final_gradient_norm,
        method_tag: MethodTag::Ebct,
    };
    if converged {
        Ok((weights, report))
    } else {
        Err(EbctError::NotConverged {
            weights: Box::new(weights),
            report,
        })
    }
}

/// `-(H + ridge I)^{-1} grad`, raising the ridge when the factorization fails.
fn newton_direction(hessian: &DMatrix<f64>, gradient: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let p = hessian.nrows();
    let mut lambda = ridge;
    loop {
        let regularized = hessian + DMatrix::identity(p, p) * lambda;
        if let Some(chol) = Cholesky::new(regularized) {
            let d = -chol.solve(gradient);
            if d.iter().all(|v| v.is_finite()) {
                return Ok(d);
            }
        }
        if ridge == 0.0 {
            return Err(EbctError::SingularHessian);
        }
        lambda *= 10.0;
        if lambda > MAX_RIDGE {
            return Err(EbctError::SingularHessian);
        }
    }
}
