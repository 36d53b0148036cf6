//! Finite-dimensional prior of a zero-drift parameter path.
//!
//! With x_0 ~ N(mu, nu) independent of the driving fBm, the path
//! x_s = x_0 + sigma * B^H_s restricted to the grid is Gaussian with
//! constant mean mu and covariance nu + sigma^2 Cov(B_s, B_t). The matrix
//! does not depend on the chain state, so its factorization is built once
//! per fit and shared read-only.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fbm::{fbm_cov_unchecked, HurstIndex, TimeGrid};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct GaussianPathPrior {
    mean: Array1<f64>,
    cov: Array2<f64>,
    chol: Array2<f64>,
}

impl GaussianPathPrior {
    pub fn build(
        grid: &TimeGrid,
        h: HurstIndex,
        mean: f64,
        nu: f64,
        sigma: f64,
    ) -> Result<Self> {
        let pts = grid.points();
        let n = pts.len();
        let mut cov = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = nu + sigma * sigma * fbm_cov_unchecked(pts[i], pts[j], h.value());
                cov[[i, j]] = v;
                cov[[j, i]] = v;
            }
        }
        let (chol, _) = linalg::cholesky_jittered(&cov, "path prior covariance")?;
        Ok(GaussianPathPrior { mean: Array1::from_elem(n, mean), cov, chol })
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Array2<f64> {
        &self.cov
    }

    pub fn chol(&self) -> &Array2<f64> {
        &self.chol
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draw from the prior.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R) -> Array1<f64> {
        &self.mean + &self.noise_into(rng)
    }

    /// Draw a mean-zero vector with the prior covariance (the ESS ellipse
    /// companion draw).
    pub fn noise_into<R: Rng + ?Sized>(&self, rng: &mut R) -> Array1<f64> {
        let n = self.dim();
        let xi: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut out = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.chol[[i, k]] * xi[k];
            }
            out[i] = acc;
        }
        out
    }

    pub fn logpdf(&self, x: &Array1<f64>) -> f64 {
        linalg::gaussian_logpdf(x, &self.mean, &self.chol)
    }
}
