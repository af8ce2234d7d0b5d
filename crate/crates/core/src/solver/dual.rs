//! The log-sum-exp dual of the entropy balancing problem and its derivatives.
//!
//! With constraint rows `g_i` and base weights `q_i`, the minimized dual is
//! `J(gamma) = ln(sum_i q_i exp(gamma' g_i))`. Its gradient is the weighted mean
//! of `g` under the implied weights `w_i(gamma)` and its Hessian the weighted
//! covariance, so `J` is convex and the balancing constraints hold exactly where
//! the gradient vanishes.

use nalgebra::{DMatrix, DVector};

use crate::error::{EbctError, Result};

/// Everything one pass over the rows yields at a given `gamma`.
#[derive(Debug, Clone)]
pub(crate) struct DualState {
    pub value: f64,
    pub weights: DVector<f64>,
    pub gradient: DVector<f64>,
}

pub(crate) fn check_inputs(gamma: &DVector<f64>, g: &DMatrix<f64>, q: &[f64]) -> Result<()> {
    if gamma.len() != g.ncols() {
        return Err(EbctError::DimensionMismatch(format!(
            "gamma has {} entries for {} constraints",
            gamma.len(),
            g.ncols()
        )));
    }
    if q.len() != g.nrows() {
        return Err(EbctError::DimensionMismatch(format!(
            "{} base weights for {} units",
            q.len(),
            g.nrows()
        )));
    }
    if q.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(EbctError::InvalidBaseWeights);
    }
    Ok(())
}

pub(crate) fn evaluate(gamma: &DVector<f64>, g: &DMatrix<f64>, q: &[f64]) -> Result<DualState> {
    let index = g * gamma;
    if index.iter().any(|s| !s.is_finite()) {
        return Err(EbctError::NonFiniteDual);
    }
    let shift = index.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut unnormalized = DVector::from_iterator(
        index.len(),
        index.iter().zip(q).map(|(s, qi)| qi * (s - shift).exp()),
    );
    let total: f64 = unnormalized.iter().sum();
    let value = shift + total.ln();
    if !value.is_finite() || !(total > 0.0) {
        return Err(EbctError::NonFiniteDual);
    }
    unnormalized /= total;
    let weights = unnormalized;
    let gradient = g.tr_mul(&weights);
    Ok(DualState {
        value,
        weights,
        gradient,
    })
}

pub(crate) fn hessian_at(state: &DualState, g: &DMatrix<f64>) -> DMatrix<f64> {
    let p = g.ncols();
    let mut h = DMatrix::zeros(p, p);
    let mut centered = DVector::zeros(p);
    for (i, row) in g.row_iter().enumerate() {
        let w = state.weights[i];
        for j in 0..p {
            centered[j] = row[j] - state.gradient[j];
        }
        // Lower triangle only; mirrored below.
        for a in 0..p {
            let wa = w * centered[a];
            for b in 0..=a {
                h[(a, b)] += wa * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

/// `J(gamma) = ln(sum_i q_i exp(gamma' g_i))`, evaluated with a max-shift.
pub fn dual_objective(gamma: &DVector<f64>, g: &DMatrix<f64>, base_weights: &[f64]) -> Result<f64> {
    check_inputs(gamma, g, base_weights)?;
    Ok(evaluate(gamma, g, base_weights)?.value)
}

/// `sum_i w_i(gamma) g_i`.
pub fn dual_gradient(
    gamma: &DVector<f64>,
    g: &DMatrix<f64>,
    base_weights: &[f64],
) -> Result<DVector<f64>> {
    check_inputs(gamma, g, base_weights)?;
    Ok(evaluate(gamma, g, base_weights)?.gradient)
}

/// Weighted covariance of the constraint rows under `w(gamma)`.
pub fn dual_hessian(
    gamma: &DVector<f64>,
    g: &DMatrix<f64>,
    base_weights: &[f64],
) -> Result<DMatrix<f64>> {
    check_inputs(gamma, g, base_weights)?;
    let state = evaluate(gamma, g, base_weights)?;
    Ok(hessian_at(&state, g))
}

/// `w_i = q_i exp(gamma' g_i) / sum_j q_j exp(gamma' g_j)`.
pub fn recover_weights(
    gamma: &DVector<f64>,
    g: &DMatrix<f64>,
    base_weights: &[f64],
) -> Result<DVector<f64>> {
    check_inputs(gamma, g, base_weights)?;
    Ok(evaluate(gamma, g, base_weights)?.weights)
}
