//! Path-space MCMC kernels: elliptical slice sampling (the default; no
//! step-size tuning, always accepts) and a random-walk Metropolis fallback
//! for cross-validating the sampler.

use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CftmError, Result};

use super::prior::GaussianPathPrior;

/// One elliptical slice update targeting p(x) ~ N(x; prior) * exp(log_lik(x)).
///
/// The update is rejection-free: the bracket shrinks toward the current
/// state and acceptance is guaranteed for any finite log likelihood. The
/// shrinkage cap exists to surface NaN likelihoods and similar programming
/// errors rather than spinning forever.
pub fn elliptical_slice_step<R, F>(
    current: &Array1<f64>,
    prior: &GaussianPathPrior,
    log_lik: F,
    max_shrink_iters: usize,
    rng: &mut R,
) -> Result<Array1<f64>>
where
    R: Rng + ?Sized,
    F: Fn(&Array1<f64>) -> f64,
{
    let mean = prior.mean();
    let nu = prior.noise_into(rng);
    let u: f64 = rng.random();
    let log_y = log_lik(current) + u.ln();

    let mut theta: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    let mut theta_min = theta - 2.0 * std::f64::consts::PI;
    let mut theta_max = theta;

    let centered = current - mean;
    for _ in 0..max_shrink_iters {
        let proposal = mean + &(centered.mapv(|v| v * theta.cos()) + nu.mapv(|v| v * theta.sin()));
        if log_lik(&proposal) > log_y {
            return Ok(proposal);
        }
        if theta < 0.0 {
            theta_min = theta;
        } else {
            theta_max = theta;
        }
        theta = theta_min + rng.random::<f64>() * (theta_max - theta_min);
    }
    Err(CftmError::numerical(format!(
        "elliptical slice shrinkage exceeded {max_shrink_iters} iterations; \
         slice level {log_y:.6e}, bracket [{theta_min:.3e}, {theta_max:.3e}], \
         current state {:?}",
        current.as_slice().unwrap_or(&[])
    )))
}

/// One random-walk Metropolis update with isotropic proposal scale.
/// Returns the (possibly unchanged) state and whether the proposal was
/// accepted.
pub fn random_walk_step<R, F>(
    current: &Array1<f64>,
    prior: &GaussianPathPrior,
    log_lik: F,
    scale: f64,
    rng: &mut R,
) -> (Array1<f64>, bool)
where
    R: Rng + ?Sized,
    F: Fn(&Array1<f64>) -> f64,
{
    let proposal =
        current + &Array1::from_iter((0..current.len()).map(|_| {
            scale * rng.sample::<f64, _>(StandardNormal)
        }));
    let log_accept = prior.logpdf(&proposal) + log_lik(&proposal)
        - prior.logpdf(current)
        - log_lik(current);
    if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
        (proposal, true)
    } else {
        (current.clone(), false)
    }
}

/// Proposal-scale adapter targeting 20-40% acceptance during burn-in.
#[derive(Debug, Clone)]
pub struct ScaleAdapter {
    pub scale: f64,
    accepted: usize,
    proposed: usize,
}

impl ScaleAdapter {
    pub fn new(scale: f64) -> Self {
        ScaleAdapter { scale, accepted: 0, proposed: 0 }
    }

    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.proposed >= 50 {
            let rate = self.accepted as f64 / self.proposed as f64;
            if rate > 0.4 {
                self.scale *= 1.3;
            } else if rate < 0.2 {
                self.scale /= 1.3;
            }
            self.accepted = 0;
            self.proposed = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{HurstIndex, TimeGrid};
    use crate::rng::RngStream;

    fn toy_prior() -> GaussianPathPrior {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        GaussianPathPrior::build(&grid, HurstIndex::new(0.5).unwrap(), 0.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn ess_with_flat_likelihood_recovers_prior() {
        // Constant likelihood: the chain's stationary law is the prior.
        let prior = toy_prior();
        let mut rng = RngStream::new(3).rng();
        let mut x = prior.sample_into(&mut rng);
        let n = prior.dim();
        let burn = 200;
        let keep = 20_000;
        let mut mean = vec![0.0; n];
        let mut second = vec![0.0; n];
        for it in 0..burn + keep {
            x = elliptical_slice_step(&x, &prior, |_| 0.0, 100, &mut rng).unwrap();
            if it >= burn {
                for i in 0..n {
                    mean[i] += x[i];
                    second[i] += x[i] * x[i];
                }
            }
        }
        for i in 0..n {
            let m = mean[i] / keep as f64;
            let var = second[i] / keep as f64 - m * m;
            let expect_var = prior.cov()[[i, i]];
            assert!((m - 0.5).abs() < 0.05, "mean[{i}] = {m}");
            assert!(
                (var / expect_var - 1.0).abs() < 0.1,
                "var[{i}] = {var}, expected {expect_var}"
            );
        }
    }

    #[test]
    fn ess_always_accepts_and_moves() {
        let prior = toy_prior();
        let mut rng = RngStream::new(4).rng();
        let mut x = prior.sample_into(&mut rng);
        for _ in 0..100 {
            let next = elliptical_slice_step(&x, &prior, |v| -0.5 * v.dot(v), 100, &mut rng)
                .expect("finite likelihood never exhausts the bracket");
            assert!(next.iter().all(|v| v.is_finite()));
            x = next;
        }
    }

    #[test]
    fn ess_shrinkage_cap_errors_on_nan_likelihood() {
        let prior = toy_prior();
        let mut rng = RngStream::new(5).rng();
        let x = prior.sample_into(&mut rng);
        let err = elliptical_slice_step(&x, &prior, |_| f64::NAN, 16, &mut rng).unwrap_err();
        assert!(err.to_string().contains("shrinkage"), "{err}");
    }

    #[test]
    fn rwm_matches_ess_posterior_moments() {
        // Both kernels target the same 1D-ish posterior: Gaussian prior
        // with a quadratic log likelihood (conjugate, so moments are known
        // to be prior-posterior shrinkage).
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let prior =
            GaussianPathPrior::build(&grid, HurstIndex::new(0.5).unwrap(), 0.0, 1.0, 0.0)
                .unwrap();
        // likelihood: observation y = 1.0 of x[1] with unit noise.
        let log_lik = |x: &Array1<f64>| -0.5 * (x[1] - 1.0) * (x[1] - 1.0);
        // prior var of x[1] is 1.0 => posterior mean 0.5, var 0.5.
        let mut rng = RngStream::new(6).rng();
        let mut x = prior.sample_into(&mut rng);
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        let keep = 40_000;
        for _ in 0..500 {
            x = elliptical_slice_step(&x, &prior, log_lik, 100, &mut rng).unwrap();
        }
        for _ in 0..keep {
            x = elliptical_slice_step(&x, &prior, log_lik, 100, &mut rng).unwrap();
            acc += x[1];
            acc2 += x[1] * x[1];
        }
        let mean_ess = acc / keep as f64;
        let var_ess = acc2 / keep as f64 - mean_ess * mean_ess;
        assert!((mean_ess - 0.5).abs() < 0.03, "ESS mean {mean_ess}");
        assert!((var_ess - 0.5).abs() < 0.05, "ESS var {var_ess}");

        let mut x = prior.sample_into(&mut rng);
        let mut adapter = ScaleAdapter::new(0.1);
        for _ in 0..2000 {
            let (next, accepted) = random_walk_step(&x, &prior, log_lik, adapter.scale, &mut rng);
            adapter.record(accepted);
            x = next;
        }
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..keep {
            let (next, _) = random_walk_step(&x, &prior, log_lik, adapter.scale, &mut rng);
            x = next;
            acc += x[1];
            acc2 += x[1] * x[1];
        }
        let mean_rwm = acc / keep as f64;
        let var_rwm = acc2 / keep as f64 - mean_rwm * mean_rwm;
        assert!((mean_rwm - 0.5).abs() < 0.05, "RWM mean {mean_rwm}");
        assert!((var_rwm - 0.5).abs() < 0.08, "RWM var {var_rwm}");
    }
}
