//! Quantitative checks for the fractal claims: long-term dependency vs
//! roughness of the increments, self-similarity, and regularity transfer
//! through the softmax map.

use serde::{Deserialize, Serialize};

use crate::error::{CftmError, Result};
use crate::fbm::{estimate_hurst, FbmSampler, HurstEstimate, HurstIndex, TimeGrid};
use crate::generative::{
    sample_param_paths, CountSpec, MeanSpec, ModelConfig, SdeParams,
};
use crate::rng::RngStream;

/// Analytic autocovariance of fBm increments over windows of width `step`
/// at lag n:
///
/// ```text
/// gamma(n) = step^{2H} (|n+1|^{2H} + |n-1|^{2H} - 2 n^{2H}) / 2
/// ```
///
/// obtained by bilinear expansion of the fBm covariance. Its sign is the
/// sign of H - 1/2 for every n >= 1.
pub fn increment_autocov(n: usize, h: HurstIndex, step: f64) -> Result<f64> {
    if n < 1 {
        return Err(CftmError::domain("lag must be at least 1"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(CftmError::domain(format!("step must be positive, got {step}")));
    }
    let two_h = 2.0 * h.value();
    let nf = n as f64;
    Ok(0.5
        * step.powf(two_h)
        * ((nf + 1.0).powf(two_h) + (nf - 1.0).powf(two_h) - 2.0 * nf.powf(two_h)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrdClass {
    LongTermDependency,
    Roughness,
    Boundary,
}

/// Partial sums of |gamma(n)| with the fitted tail-growth exponent and the
/// resulting classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrdReport {
    pub h: HurstIndex,
    pub horizon: usize,
    /// partial_sums[m-1] = sum_{n=1..m} |gamma(n)|; nondecreasing.
    pub partial_sums: Vec<f64>,
    /// OLS slope of log(partial sum) against log(m) over the last decade.
    pub growth_exponent: f64,
    /// Analytic tail exponent of gamma(n) ~ H(2H-1) n^{2H-2}.
    pub tail_exponent: f64,
    pub classification: LrdClass,
}

/// Classify the increments by Definition-3 summability.
///
/// The infinite sum of |gamma(n)| diverges iff the tail exponent 2H-2 is at
/// least -1, i.e. H >= 1/2; the decision is made analytically because
/// divergence just above H = 1/2 is far too slow to detect by summation.
/// Numeric partial sums are emitted as corroboration, and H within
/// 0.5 +- 0.01 is reported as boundary rather than forced into a class
/// (at H = 1/2 every gamma(n) is exactly zero).
pub fn classify_lrd(h: HurstIndex, horizon: usize) -> Result<LrdReport> {
    if horizon < 1_000 {
        return Err(CftmError::domain(format!(
            "horizon must be at least 1000, got {horizon}"
        )));
    }
    let mut partial_sums = Vec::with_capacity(horizon);
    let mut acc = 0.0;
    for n in 1..=horizon {
        acc += increment_autocov(n, h, 1.0)?.abs();
        partial_sums.push(acc);
    }

    let hv = h.value();
    let tail_exponent = 2.0 * hv - 2.0;
    let classification = if (hv - 0.5).abs() <= 0.01 {
        LrdClass::Boundary
    } else if hv > 0.5 {
        LrdClass::LongTermDependency
    } else {
        LrdClass::Roughness
    };

    // Last-decade slope of log partial sum vs log m; ~2H-1 when divergent,
    // ~0 when the series has converged.
    let lo = horizon / 10;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for m in lo.max(1)..=horizon {
        if partial_sums[m - 1] > 0.0 {
            xs.push((m as f64).ln());
            ys.push(partial_sums[m - 1].ln());
        }
    }
    let growth_exponent = if xs.len() >= 2 { ols_slope(&xs, &ys) } else { 0.0 };

    Ok(LrdReport { h, horizon, partial_sums, growth_exponent, tail_exponent, classification })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Per-coordinate outcome of the regularity-transfer experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateEstimate {
    Estimated(HurstEstimate),
    /// The softmax coordinate was (numerically) constant, e.g. K = 1.
    Degenerate { message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub input_h: HurstIndex,
    pub num_topics: usize,
    pub length: usize,
    pub seed: u64,
    /// One estimate per softmax coordinate of the simulated topic path.
    pub coordinates: Vec<CoordinateEstimate>,
}

impl TransferReport {
    /// Point estimates of the coordinates that produced one.
    pub fn estimates(&self) -> Vec<f64> {
        self.coordinates
            .iter()
            .filter_map(|c| match c {
                CoordinateEstimate::Estimated(e) => Some(e.estimate),
                CoordinateEstimate::Degenerate { .. } => None,
            })
            .collect()
    }
}

/// Simulate a zero-drift topic path on an equispaced grid over [0, 1],
/// apply softmax per time point, and estimate the Hurst index of each
/// coordinate's increment series. The softmax map has bounded derivatives,
/// so the coordinates should inherit the regularity of the driving fBm.
pub fn empirical_regularity_transfer(
    num_topics: usize,
    h: HurstIndex,
    length: usize,
    seed: u64,
) -> Result<TransferReport> {
    if length < (1 << 12) {
        return Err(CftmError::domain(format!(
            "transfer experiment needs at least 4096 increments, got {length}"
        )));
    }
    if num_topics < 1 {
        return Err(CftmError::domain("need at least one topic"));
    }
    // The grid lives on [0, 1] so softmax stays responsive: fBm variance at
    // the horizon is 1 regardless of H, and slope-based Hurst estimators
    // are invariant to the time scale.
    let grid = TimeGrid::equispaced(length, 1.0 / length as f64)?;
    let config = ModelConfig {
        num_topics,
        vocab_size: 2,
        h,
        grid,
        alpha: SdeParams::new(MeanSpec::Scalar(0.0), 1.0, 1.0)?,
        beta: SdeParams::new(MeanSpec::Scalar(0.0), 1.0, 0.0)?,
        beta_evolves: false,
        tokens_per_time: CountSpec::Constant(1),
    };
    let paths = sample_param_paths(&config, RngStream::new(seed))?;

    let mut coordinates = Vec::with_capacity(num_topics);
    for k in 0..num_topics {
        let series: Vec<f64> = (0..=length).map(|t| paths.topic_dist(t)[k]).collect();
        let increments: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
        match estimate_hurst(&increments) {
            Ok(est) => coordinates.push(CoordinateEstimate::Estimated(est)),
            Err(e) => coordinates.push(CoordinateEstimate::Degenerate { message: e.to_string() }),
        }
    }
    Ok(TransferReport { input_h: h, num_topics, length, seed, coordinates })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarityReport {
    pub h: HurstIndex,
    pub scale: f64,
    pub t: f64,
    pub num_draws: usize,
    pub seed: u64,
    pub var_scaled: f64,
    pub var_base: f64,
    /// Var(B_{at}) / (a^{2H} Var(B_t)); 1 in expectation.
    pub ratio: f64,
}

/// Empirical check of self-similarity: B_{at} and a^H B_t share their law,
/// so the variance ratio against a^{2H} Var(B_t) is 1. The two variances
/// come from independent draw sets.
pub fn self_similarity_check(
    h: HurstIndex,
    scale: f64,
    t: f64,
    num_draws: usize,
    stream: RngStream,
) -> Result<SelfSimilarityReport> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CftmError::domain(format!("scale factor must be positive, got {scale}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(CftmError::domain(format!("time must be positive, got {t}")));
    }
    if num_draws < 2 {
        return Err(CftmError::domain("need at least two draws"));
    }

    let var_at = |point: f64, sub: RngStream| -> Result<f64> {
        let grid = TimeGrid::new(vec![0.0, point])?;
        let sampler = FbmSampler::new(&grid, h)?;
        let mut rng = sub.rng();
        let mut sum_sq = 0.0;
        for _ in 0..num_draws {
            let v = sampler.sample_into(&mut rng)[1];
            sum_sq += v * v;
        }
        Ok(sum_sq / num_draws as f64)
    };

    let var_scaled = var_at(scale * t, stream.with_stream(1))?;
    let var_base = var_at(t, stream.with_stream(2))?;
    let ratio = var_scaled / (scale.powf(2.0 * h.value()) * var_base);
    Ok(SelfSimilarityReport {
        h,
        scale,
        t,
        num_draws,
        seed: stream.seed,
        var_scaled,
        var_base,
        ratio,
    })
}
