//! Exact fBm sampling via Cholesky of the grid covariance, and a spectral
//! (circulant embedding) fGn sampler as the fast path for equispaced grids.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{CftmError, Result};
use crate::linalg;
use crate::rng::RngStream;

use super::{FbmCovariance, FbmPath, HurstIndex, TimeGrid};

/// Exact Gaussian sampler for fBm on an arbitrary grid.
///
/// The t=0 row and column of the covariance are identically zero; they are
/// dropped before factorization so the factored matrix is strictly positive
/// definite, and the zero value is re-inserted into every sample.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: TimeGrid,
    h: HurstIndex,
    chol: Array2<f64>,
}

impl FbmSampler {
    pub fn new(grid: &TimeGrid, h: HurstIndex) -> Result<Self> {
        let cov = FbmCovariance::build(grid, h);
        Self::from_covariance(&cov)
    }

    pub fn from_covariance(cov: &FbmCovariance) -> Result<Self> {
        let n = cov.grid().len();
        let reduced = if n > 1 {
            cov.matrix().slice(ndarray::s![1.., 1..]).to_owned()
        } else {
            Array2::zeros((0, 0))
        };
        let (chol, _jitter) = linalg::cholesky_jittered(&reduced, "fBm covariance")?;
        Ok(FbmSampler { grid: cov.grid().clone(), h: cov.h(), chol })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn h(&self) -> HurstIndex {
        self.h
    }

    /// Draw one path into a fresh vector; values[0] is exactly 0.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.chol.nrows();
        let xi: Array1<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut values = vec![0.0; self.grid.len()];
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.chol[[i, k]] * xi[k];
            }
            values[i + 1] = acc;
        }
        values
    }

    pub fn sample(&self, stream: RngStream) -> FbmPath {
        let mut rng = stream.rng();
        FbmPath { grid: self.grid.clone(), values: self.sample_into(&mut rng), seed: stream }
    }
}

/// One exact fBm draw via Cholesky factorization of the grid covariance.
pub fn sample_fbm_exact(grid: &TimeGrid, h: HurstIndex, stream: RngStream) -> Result<FbmPath> {
    Ok(FbmSampler::new(grid, h)?.sample(stream))
}

/// Stationary unit-step fractional Gaussian noise sampler using circulant
/// embedding (Davies-Harte). Exact when the embedding eigenvalues are
/// nonnegative, which holds for the fGn autocovariance at every H in (0,1);
/// a genuinely negative eigenvalue triggers a fall back to the exact
/// Cholesky sampler with a logged warning.
pub struct FgnSampler {
    n: usize,
    m: usize,
    sqrt_eigs: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
    fallback: Option<FbmSampler>,
}

/// Autocovariance of unit-step fGn at lag k.
fn fgn_autocov(k: usize, h: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    let two_h = 2.0 * h;
    0.5 * ((k + 1.0).powf(two_h) + (k - 1.0).powf(two_h) - 2.0 * k.powf(two_h))
}

impl FgnSampler {
    pub fn new(n: usize, h: HurstIndex) -> Result<Self> {
        if n == 0 {
            return Err(CftmError::domain("fGn sample length must be at least 1"));
        }
        let m = 2 * n;
        // First row of the circulant embedding: gamma(0..=n) then mirrored.
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        for k in 0..=n {
            row.push(Complex::new(fgn_autocov(k, h.value()), 0.0));
        }
        for k in (1..n).rev() {
            row.push(Complex::new(fgn_autocov(k, h.value()), 0.0));
        }
        debug_assert_eq!(row.len(), m);

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);

        let max_eig = row.iter().map(|c| c.re.abs()).fold(0.0_f64, f64::max);
        let tol = 1e-9 * max_eig;
        let mut fallback = None;
        if row.iter().any(|c| c.re < -tol) {
            let min_eig = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
            log::warn!(
                "circulant embedding not PSD for n={n}, H={}: min eigenvalue {min_eig:.3e}; \
                 falling back to exact Cholesky sampling",
                h.value()
            );
            fallback = Some(FbmSampler::new(&TimeGrid::unit(n), h)?);
        }
        let sqrt_eigs = row.iter().map(|c| c.re.max(0.0).sqrt()).collect();
        let ifft = planner.plan_fft_inverse(m);
        Ok(FgnSampler { n, m, sqrt_eigs, ifft, fallback })
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if let Some(exact) = &self.fallback {
            let path = exact.sample_into(rng);
            return path.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let (n, m) = (self.n, self.m);
        let mut v = vec![Complex::new(0.0, 0.0); m];
        v[0] = Complex::new(self.sqrt_eigs[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
        for j in 1..n {
            let scale = self.sqrt_eigs[j] / std::f64::consts::SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            v[j] = Complex::new(scale * re, scale * im);
            v[m - j] = v[j].conj();
        }
        v[n] = Complex::new(self.sqrt_eigs[n] * rng.sample::<f64, _>(StandardNormal), 0.0);

        self.ifft.process(&mut v);
        let norm = 1.0 / (m as f64).sqrt();
        v.iter().take(n).map(|c| c.re * norm).collect()
    }
}

/// Draw n unit-step fGn increments; their cumulative sums form an fBm path
/// on the grid 0..n.
pub fn sample_fgn_spectral(n: usize, h: HurstIndex, stream: RngStream) -> Result<Vec<f64>> {
    let sampler = FgnSampler::new(n, h)?;
    let mut rng = stream.rng();
    Ok(sampler.sample_into(&mut rng))
}

/// Recommended path sampler: spectral fast path on equispaced grids (the
/// increments scale by step^H under self-similarity), exact Cholesky
/// otherwise.
pub fn sample_fbm(grid: &TimeGrid, h: HurstIndex, stream: RngStream) -> Result<FbmPath> {
    if let Some(step) = grid.equispaced_step() {
        let n = grid.len() - 1;
        let increments = sample_fgn_spectral(n, h, stream)?;
        let scale = step.powf(h.value());
        let mut values = Vec::with_capacity(grid.len());
        values.push(0.0);
        let mut acc = 0.0;
        for inc in increments {
            acc += scale * inc;
            values.push(acc);
        }
        Ok(FbmPath { grid: grid.clone(), values, seed: stream })
    } else {
        sample_fbm_exact(grid, h, stream)
    }
}

/// Empirical covariance matrix of a set of mean-zero sample vectors.
pub(crate) fn empirical_cov(samples: &[Vec<f64>]) -> Array2<f64> {
    let n = samples[0].len();
    let mut cov = Array2::<f64>::zeros((n, n));
    for s in samples {
        for i in 0..n {
            for j in 0..=i {
                cov[[i, j]] += s[i] * s[j];
            }
        }
    }
    let scale = 1.0 / samples.len() as f64;
    for i in 0..n {
        for j in 0..=i {
            cov[[i, j]] *= scale;
            cov[[j, i]] = cov[[i, j]];
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(v: f64) -> HurstIndex {
        HurstIndex::new(v).unwrap()
    }

    #[test]
    fn single_point_grid_gives_zero_path() {
        let grid = TimeGrid::new(vec![0.0]).unwrap();
        for &hv in &[0.1, 0.5, 0.9] {
            let path = sample_fbm_exact(&grid, h(hv), RngStream::new(1)).unwrap();
            assert_eq!(path.values, vec![0.0]);
        }
    }

    #[test]
    fn path_starts_at_zero() {
        let grid = TimeGrid::new(vec![0.0, 0.4, 1.0, 2.5]).unwrap();
        let path = sample_fbm_exact(&grid, h(0.7), RngStream::new(3)).unwrap();
        assert_eq!(path.values[0], 0.0);
        assert_eq!(path.values.len(), 4);
        assert!(path.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn exact_sampler_is_deterministic_per_stream() {
        let grid = TimeGrid::unit(8);
        let a = sample_fbm_exact(&grid, h(0.3), RngStream::new(11)).unwrap();
        let b = sample_fbm_exact(&grid, h(0.3), RngStream::new(11)).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_fbm_exact(&grid, h(0.3), RngStream::new(12)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn single_increment_is_standard_normal() {
        // n=1: the lone increment has variance |t-s|^{2H} = 1 for every H.
        for &hv in &[0.1, 0.5, 0.9] {
            let sampler = FgnSampler::new(1, h(hv)).unwrap();
            let mut rng = RngStream::new(5).rng();
            let mut sum_sq = 0.0;
            let draws = 20_000;
            for _ in 0..draws {
                let x = sampler.sample_into(&mut rng);
                assert_eq!(x.len(), 1);
                sum_sq += x[0] * x[0];
            }
            let var = sum_sq / draws as f64;
            assert!((var - 1.0).abs() < 0.05, "H={hv}: var {var}");
        }
    }

    #[test]
    fn fgn_lag1_autocorrelation_matches_theory() {
        // lag-1 autocorrelation of fGn is 2^{2H-1} - 1.
        let n = 1 << 14;
        for (hv, expected, tol) in [(0.5, 0.0, 0.02), (0.1, 2f64.powf(-0.8) - 1.0, 0.03)] {
            let x = sample_fgn_spectral(n, h(hv), RngStream::new(42)).unwrap();
            let mean = x.iter().sum::<f64>() / n as f64;
            let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let lag1: f64 = x
                .windows(2)
                .map(|w| (w[0] - mean) * (w[1] - mean))
                .sum::<f64>()
                / (n - 1) as f64;
            let rho = lag1 / var;
            assert!(
                (rho - expected).abs() < tol,
                "H={hv}: lag-1 autocorrelation {rho}, expected {expected}"
            );
        }
    }

    #[test]
    fn spectral_cumsum_matches_exact_law_on_unit_grid() {
        // Compare empirical variances of B_t from both samplers at a few t.
        let n = 16;
        let grid = TimeGrid::unit(n);
        let hv = h(0.8);
        let draws = 4000;
        let exact = FbmSampler::new(&grid, hv).unwrap();
        let spectral = FgnSampler::new(n, hv).unwrap();
        let mut rng_e = RngStream::new(9).rng();
        let mut rng_s = RngStream::new(10).rng();
        let mut var_e = vec![0.0; n + 1];
        let mut var_s = vec![0.0; n + 1];
        for _ in 0..draws {
            let pe = exact.sample_into(&mut rng_e);
            let incs = spectral.sample_into(&mut rng_s);
            let mut acc = 0.0;
            for t in 1..=n {
                var_e[t] += pe[t] * pe[t];
                acc += incs[t - 1];
                var_s[t] += acc * acc;
            }
        }
        for t in [4, 16] {
            let ve = var_e[t] / draws as f64;
            let vs = var_s[t] / draws as f64;
            let theory = (t as f64).powf(1.6);
            assert!((ve / theory - 1.0).abs() < 0.1, "exact var at t={t}: {ve} vs {theory}");
            assert!((vs / theory - 1.0).abs() < 0.1, "spectral var at t={t}: {vs} vs {theory}");
        }
    }

    #[test]
    fn stationary_increments_variance() {
        // Var(B_t - B_s) = |t-s|^{2H} within 5% over 10^4 draws.
        let grid = TimeGrid::new(vec![0.0, 1.5, 4.0]).unwrap();
        let hv = h(0.7);
        let sampler = FbmSampler::new(&grid, hv).unwrap();
        let mut rng = RngStream::new(21).rng();
        let draws = 10_000;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let p = sampler.sample_into(&mut rng);
            let inc = p[2] - p[1];
            sum_sq += inc * inc;
        }
        let var = sum_sq / draws as f64;
        let theory = 2.5_f64.powf(1.4);
        assert!((var / theory - 1.0).abs() < 0.05, "var {var} vs {theory}");
    }

    #[test]
    fn dispatcher_uses_step_scaling() {
        // Equispaced grid with step 0.5 must still have Var(B_t) = t^{2H}.
        let grid = TimeGrid::equispaced(8, 0.5).unwrap();
        let hv = h(0.6);
        let draws = 10_000;
        let mut sum_sq = 0.0;
        for i in 0..draws {
            let p = sample_fbm(&grid, hv, RngStream::new(77).with_stream(i)).unwrap();
            let last = *p.values.last().unwrap();
            sum_sq += last * last;
        }
        let var = sum_sq / draws as f64;
        let theory = 4.0_f64.powf(1.2);
        assert!((var / theory - 1.0).abs() < 0.05, "var {var} vs {theory}");
    }
}
