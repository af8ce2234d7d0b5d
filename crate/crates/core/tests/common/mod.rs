#![allow(dead_code)]

//! Test-only oracles and instance generators. Nothing here calls the solver.

use ebct::{standardize, Dataset, StandardizedSample};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Treatment linear in the covariates plus noise, so the constraints are
/// feasible with high probability.
pub fn random_dataset(r: &mut ChaCha8Rng, n: usize, k: usize, selection: f64) -> Dataset {
    let x = DMatrix::from_fn(n, k, |_, _| r.sample::<f64, _>(StandardNormal));
    let t: Vec<f64> = (0..n)
        .map(|i| {
            let index: f64 = (0..k).map(|j| selection * x[(i, j)]).sum();
            index + r.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Dataset::new(t, x, None).unwrap()
}

pub fn random_sample(r: &mut ChaCha8Rng, n: usize, k: usize) -> StandardizedSample {
    standardize(&random_dataset(r, n, k, 0.5)).unwrap()
}

pub fn entropy(w: &[f64], q: &[f64]) -> f64 {
    w.iter().zip(q).map(|(w, q)| if *w > 0.0 { w * (w / q).ln() } else { 0.0 }).sum()
}

/// Direct evaluation of `ln(sum_i q_i exp(gamma' g_i))` without shifting.
pub fn naive_dual(gamma: &DVector<f64>, g: &DMatrix<f64>, q: &[f64]) -> f64 {
    (0..g.nrows())
        .map(|i| q[i] * (g.row(i).transpose().dot(gamma)).exp())
        .sum::<f64>()
        .ln()
}

pub fn central_difference<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |j, _| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[j] += h;
        down[j] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-3)
}

/// Rows of the full equality system: `g' w = 0` and `1' w = 1`.
pub fn equality_system(g: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = g.nrows();
    let p = g.ncols();
    let a = DMatrix::from_fn(p + 1, n, |r, i| if r < p { g[(i, r)] } else { 1.0 });
    let mut b = DVector::zeros(p + 1);
    b[p] = 1.0;
    (a, b)
}

/// Orthonormal basis of the null space of `a`, from the eigenvectors of `a'a`
/// with (numerically) zero eigenvalue.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.transpose() * a);
    let max = eig.eigenvalues.amax();
    let cols: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|&j| eig.eigenvalues[j].abs() < 1e-10 * max)
        .map(|j| eig.eigenvectors.column(j).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Random direction in the null space of the equality system.
pub fn null_space_direction(r: &mut ChaCha8Rng, g: &DMatrix<f64>) -> DVector<f64> {
    let (a, _) = equality_system(g);
    let noise = DVector::from_fn(g.nrows(), |_, _| r.sample::<f64, _>(StandardNormal));
    let aat = &a * a.transpose();
    let correction = a.transpose() * aat.cholesky().unwrap().solve(&(&a * &noise));
    noise - correction
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Range of `z` keeping `base + dir * z` strictly positive.
fn positive_interval(base: &DVector<f64>, dir: &DVector<f64>) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..base.len() {
        if dir[i].abs() < 1e-14 {
            if base[i] <= 0.0 {
                return None;
            }
        } else if dir[i] > 0.0 {
            lo = lo.max(-base[i] / dir[i]);
        } else {
            hi = hi.min(-base[i] / dir[i]);
        }
    }
    (hi > lo + 1e-9 && lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

/// Minimizes `sum_i w_i ln(n w_i)` over positive weights satisfying the
/// equality system by parameterizing the feasible affine set directly and
/// searching it with (nested) golden sections. Handles null spaces of
/// dimension one or two. Returns `None` when no positive weights are feasible.
pub fn brute_force_entropy_weights(g: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = g.nrows();
    let q = vec![1.0 / n as f64; n];
    let (a, b) = equality_system(g);
    let w0 = a.transpose() * (&a * a.transpose()).cholesky()?.solve(&b);
    let basis = null_space(&a);
    let objective = |w: &DVector<f64>| entropy(w.as_slice(), &q);
    const ITERS: usize = 200;
    match basis.ncols() {
        1 => {
            let v = basis.column(0).into_owned();
            let (lo, hi) = positive_interval(&w0, &v)?;
            let z = golden_section(|z| objective(&(&w0 + &v * z)), lo, hi, ITERS);
            Some(&w0 + &v * z)
        }
        2 => {
            let v1 = basis.column(0).into_owned();
            let v2 = basis.column(1).into_owned();
            // z1 range: extreme z1 over feasible polygon vertices.
            let mut vertices = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let m = nalgebra::Matrix2::new(v1[i], v2[i], v1[j], v2[j]);
                    if let Some(inv) = m.try_inverse() {
                        let z = inv * nalgebra::Vector2::new(-w0[i], -w0[j]);
                        let w = &w0 + &v1 * z[0] + &v2 * z[1];
                        if w.iter().all(|v| *v >= -1e-12) {
                            vertices.push(z[0]);
                        }
                    }
                }
            }
            let lo = vertices.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo + 1e-9) {
                return None;
            }
            let inner = |z1: f64| -> Option<(f64, f64)> {
                let base = &w0 + &v1 * z1;
                let (l2, h2) = positive_interval(&base, &v2)?;
                let z2 = golden_section(|z2| objective(&(&base + &v2 * z2)), l2, h2, ITERS);
                Some((z2, objective(&(&base + &v2 * z2))))
            };
            let z1 = golden_section(|z1| inner(z1).map_or(f64::INFINITY, |(_, f)| f), lo, hi, ITERS);
            let (z2, _) = inner(z1)?;
            Some(&w0 + &v1 * z1 + &v2 * z2)
        }
        _ => None,
    }
}
