use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{EbctError, Result};

/// Squared Cholesky pivots of the equilibrated normal matrix below this are
/// treated as collinearity.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Solves `min_b sum_i w_i (y_i - x_i' b)^2` through the normal equations.
///
/// Columns are rescaled to unit weighted norm before the Cholesky
/// factorization and the scaling is undone on the coefficients, so raw
/// polynomial designs stay well conditioned.
pub(crate) fn weighted_least_squares(
    design: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
) -> Result<DVector<f64>> {
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n || w.len() != n {
        return Err(EbctError::DimensionMismatch(format!(
            "design has {n} rows, outcome {}, weights {}",
            y.len(),
            w.len()
        )));
    }
    if p == 0 || n < p {
        return Err(EbctError::RankDeficientDesign);
    }

    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    let mut xtwy = DVector::<f64>::zeros(p);
    for i in 0..n {
        let wi = w[i];
        for a in 0..p {
            let xa = wi * design[(i, a)];
            xtwy[a] += xa * y[i];
            for b in 0..=a {
                xtwx[(a, b)] += xa * design[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(b, a)] = xtwx[(a, b)];
        }
    }

    let scale: Vec<f64> = (0..p).map(|a| xtwx[(a, a)].sqrt()).collect();
    if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(EbctError::RankDeficientDesign);
    }
    for a in 0..p {
        xtwy[a] /= scale[a];
        for b in 0..p {
            xtwx[(a, b)] /= scale[a] * scale[b];
        }
    }

    let chol = Cholesky::new(xtwx).ok_or(EbctError::RankDeficientDesign)?;
    let l = chol.l_dirty();
    if (0..p).any(|a| l[(a, a)] * l[(a, a)] < PIVOT_TOLERANCE) {
        return Err(EbctError::RankDeficientDesign);
    }
    let mut coef = chol.solve(&xtwy);
    for a in 0..p {
        coef[a] /= scale[a];
    }
    Ok(coef)
}
