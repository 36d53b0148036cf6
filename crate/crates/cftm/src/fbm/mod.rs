//! Fractional Brownian motion: covariance construction, exact and spectral
//! sampling, and Hurst-index estimation.
//!
//! A path `B^H` with Hurst index `H` in (0,1) is the mean-zero Gaussian
//! process with `B^H_0 = 0` and
//!
//! ```text
//! Cov(B^H_s, B^H_t) = (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2
//! ```
//!
//! `H = 1/2` recovers standard Brownian motion; `H > 1/2` gives positively
//! correlated increments (long-term dependency), `H < 1/2` negatively
//! correlated ones (roughness).

mod hurst;
mod sampling;

pub use hurst::{estimate_hurst, HurstDiagnostics, HurstEstimate};
pub use sampling::{sample_fbm, sample_fbm_exact, sample_fgn_spectral, FbmSampler, FgnSampler};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CftmError, Result};
use crate::rng::RngStream;

/// Hurst index, constrained to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(HurstIndex(value))
        } else {
            Err(CftmError::domain(format!(
                "Hurst index must lie in (0, 1), got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstIndex {
    type Error = CftmError;
    fn try_from(v: f64) -> Result<Self> {
        HurstIndex::new(v)
    }
}

impl From<HurstIndex> for f64 {
    fn from(h: HurstIndex) -> f64 {
        h.0
    }
}

/// Strictly increasing observation timestamps starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(CftmError::domain("time grid must contain at least one point"));
        }
        if points[0] != 0.0 {
            return Err(CftmError::domain(format!(
                "time grid must start at 0, got {}",
                points[0]
            )));
        }
        for w in points.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(CftmError::domain(format!(
                    "time grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(TimeGrid { points })
    }

    /// Unit-step grid 0, 1, ..., n (n+1 points).
    pub fn unit(n: usize) -> Self {
        TimeGrid { points: (0..=n).map(|i| i as f64).collect() }
    }

    /// Grid 0, step, 2*step, ..., n_steps*step.
    pub fn equispaced(n_steps: usize, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(CftmError::domain(format!("grid step must be positive, got {step}")));
        }
        Ok(TimeGrid { points: (0..=n_steps).map(|i| i as f64 * step).collect() })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Returns the common step when the grid is equispaced (relative
    /// tolerance 1e-9), `None` otherwise. A two-point grid is equispaced.
    pub fn equispaced_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let step = self.points[1];
        for w in self.points.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs() {
                return None;
            }
        }
        Some(step)
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = CftmError;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        TimeGrid::new(points)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Vec<f64> {
        grid.points
    }
}

/// Covariance of fBm for a pair of nonnegative times.
pub fn fbm_cov(s: f64, t: f64, h: HurstIndex) -> Result<f64> {
    if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < 0.0 {
        return Err(CftmError::domain(format!(
            "fbm_cov requires nonnegative finite times, got s={s}, t={t}"
        )));
    }
    Ok(fbm_cov_unchecked(s, t, h.value()))
}

pub(crate) fn fbm_cov_unchecked(s: f64, t: f64, two_h_base: f64) -> f64 {
    let two_h = 2.0 * two_h_base;
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// The fBm covariance matrix over a time grid.
#[derive(Debug, Clone)]
pub struct FbmCovariance {
    grid: TimeGrid,
    h: HurstIndex,
    matrix: Array2<f64>,
}

impl FbmCovariance {
    pub fn build(grid: &TimeGrid, h: HurstIndex) -> Self {
        let pts = grid.points();
        let n = pts.len();
        let mut matrix = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = fbm_cov_unchecked(pts[i], pts[j], h.value());
                matrix[[i, j]] = v;
                matrix[[j, i]] = v;
            }
        }
        FbmCovariance { grid: grid.clone(), h, matrix }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn h(&self) -> HurstIndex {
        self.h
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// CSV with the time points as header and one matrix row per line.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = self.grid.points().iter().map(|t| t.to_string()).collect();
        w.write_record(&header).map_err(io_from_csv)?;
        for row in self.matrix.rows() {
            let rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            w.write_record(&rec).map_err(io_from_csv)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One realized scalar fBm path over a grid, with its RNG stream recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbmPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub seed: RngStream,
}

/// CSV for a batch of paths over a common grid: header `seed,stream,<times...>`,
/// one row per path.
pub fn write_paths_csv<W: std::io::Write>(out: W, paths: &[FbmPath]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["seed".to_string(), "stream".to_string()];
    if let Some(first) = paths.first() {
        header.extend(first.grid.points().iter().map(|t| t.to_string()));
    }
    w.write_record(&header).map_err(io_from_csv)?;
    for p in paths {
        let mut rec = vec![p.seed.seed.to_string(), p.seed.stream.to_string()];
        rec.extend(p.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io_from_csv)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn io_from_csv(e: csv::Error) -> CftmError {
    CftmError::numerical(format!("csv write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(v: f64) -> HurstIndex {
        HurstIndex::new(v).unwrap()
    }

    #[test]
    fn hurst_bounds_enforced() {
        assert!(HurstIndex::new(0.0).is_err());
        assert!(HurstIndex::new(1.0).is_err());
        assert!(HurstIndex::new(f64::NAN).is_err());
        assert!(HurstIndex::new(0.5).is_ok());
    }

    #[test]
    fn grid_invariants_enforced() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![1.0, 2.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0]).is_ok());
        assert!(TimeGrid::new(vec![0.0, 0.5, 1.7]).is_ok());
    }

    #[test]
    fn cov_diagonal_is_t_pow_2h() {
        // Cov(B_t, B_t) = t^{2H}; t=2, H=0.5 gives 2.
        assert_abs_diff_eq!(fbm_cov(2.0, 2.0, h(0.5)).unwrap(), 2.0);
        for &hv in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            for &t in &[0.5, 1.0, 2.0, 7.5] {
                assert_abs_diff_eq!(
                    fbm_cov(t, t, h(hv)).unwrap(),
                    t.powf(2.0 * hv),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn cov_brownian_case_is_min() {
        // H = 1/2: Cov(B_s, B_t) = min(s, t); direct evaluation at (1,2) gives 1.
        assert_abs_diff_eq!(fbm_cov(1.0, 2.0, h(0.5)).unwrap(), 1.0);
        for s in 0..=16 {
            for t in 0..=16 {
                let v = fbm_cov(s as f64, t as f64, h(0.5)).unwrap();
                assert_eq!(v, s.min(t) as f64);
            }
        }
    }

    #[test]
    fn cov_zero_time_is_zero() {
        assert_eq!(fbm_cov(0.0, 5.0, h(0.3)).unwrap(), 0.0);
    }

    #[test]
    fn cov_rejects_negative_time() {
        assert!(fbm_cov(-1.0, 2.0, h(0.5)).is_err());
    }

    #[test]
    fn cov_symmetric_on_lattice() {
        let lattice = [0.0, 0.5, 1.0, 1.7, 2.0, 3.25, 10.0];
        for &hv in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            for &s in &lattice {
                for &t in &lattice {
                    let a = fbm_cov(s, t, h(hv)).unwrap();
                    let b = fbm_cov(t, s, h(hv)).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn covariance_matrix_two_point_brownian() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let cov = FbmCovariance::build(&grid, h(0.5));
        let m = cov.matrix();
        assert_eq!(m[[0, 0]], 0.0);
        assert_eq!(m[[0, 1]], 0.0);
        assert_eq!(m[[1, 0]], 0.0);
        assert_eq!(m[[1, 1]], 1.0);
    }

    #[test]
    fn covariance_matrix_three_point_h09() {
        // grid [0,1,2], H=0.9: c = (1 + 2^{1.8} - 1)/2 = 2^{0.8}.
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let cov = FbmCovariance::build(&grid, h(0.9));
        let m = cov.matrix();
        let c = 2.0_f64.powf(0.8);
        for j in 0..3 {
            assert_eq!(m[[0, j]], 0.0);
            assert_eq!(m[[j, 0]], 0.0);
        }
        assert_abs_diff_eq!(m[[1, 1]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[[1, 2]], c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[[2, 1]], c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[[2, 2]], 2.0_f64.powf(1.8), epsilon = 1e-15);
    }

    #[test]
    fn covariance_matrix_symmetric() {
        let grid = TimeGrid::new(vec![0.0, 0.3, 1.1, 4.0, 9.5]).unwrap();
        for &hv in &[0.1, 0.5, 0.9] {
            let cov = FbmCovariance::build(&grid, h(hv));
            let m = cov.matrix();
            for i in 0..grid.len() {
                for j in 0..grid.len() {
                    assert_eq!(m[[i, j]], m[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn equispaced_detection() {
        assert_eq!(TimeGrid::unit(4).equispaced_step(), Some(1.0));
        let g = TimeGrid::equispaced(8, 0.25).unwrap();
        assert_eq!(g.equispaced_step(), Some(0.25));
        let g = TimeGrid::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(g.equispaced_step(), None);
        assert_eq!(TimeGrid::new(vec![0.0]).unwrap().equispaced_step(), None);
    }
}
