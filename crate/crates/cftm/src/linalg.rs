//! Small dense linear algebra: Cholesky factorization with a jitter ladder,
//! forward substitution, and Gaussian log densities. Matrices here are tiny
//! (grid-sized), so a plain O(n^3) factorization is plenty.

use ndarray::{Array1, Array2};

use crate::error::{CftmError, Result};

/// Plain lower Cholesky. Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Cholesky with diagonal jitter: 1e-10 * max(diag) added before the first
/// attempt, escalating by 10x up to 1e-6 * max(diag), then an error.
/// Returns the factor and the jitter that was actually applied.
pub fn cholesky_jittered(a: &Array2<f64>, context: &str) -> Result<(Array2<f64>, f64)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Array2::zeros((0, 0)), 0.0));
    }
    let max_diag = (0..n).map(|i| a[[i, i]]).fold(0.0_f64, f64::max);
    if max_diag <= 0.0 {
        return Err(CftmError::numerical(format!(
            "{context}: covariance has non-positive diagonal (max {max_diag})"
        )));
    }
    let mut rel = 1e-10;
    while rel <= 1e-6 {
        let jitter = rel * max_diag;
        let mut jittered = a.clone();
        for i in 0..n {
            jittered[[i, i]] += jitter;
        }
        if let Some(l) = cholesky(&jittered) {
            return Ok((l, jitter));
        }
        rel *= 10.0;
    }
    Err(CftmError::numerical(format!(
        "{context}: Cholesky failed after jitter escalation to 1e-6 * max diagonal"
    )))
}

/// Solve L x = b for lower-triangular L.
pub fn solve_lower(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let xk = x[k];
            x[i] -= l[[i, k]] * xk;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Log density of N(mean, L L^T) at x, up to nothing (full constant included).
pub fn gaussian_logpdf(x: &Array1<f64>, mean: &Array1<f64>, chol: &Array2<f64>) -> f64 {
    let n = x.len() as f64;
    let centered = x - mean;
    let z = solve_lower(chol, &centered);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let logdet: f64 = (0..chol.nrows()).map(|i| chol[[i, i]].ln()).sum();
    -0.5 * quad - logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}
