//! Softmax and categorical primitives, computed in log space where it
//! matters for stability.

use rand::Rng;

use crate::error::{CftmError, Result};

/// Max-subtracted softmax. Entries are positive and sum to 1 within 1e-12.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(CftmError::domain("softmax of an empty vector"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(CftmError::domain("softmax requires finite entries"));
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// log sum_i exp(x_i), max-subtracted.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Log density of a categorical observation given as a one-hot indicator:
/// log prod_v phi_v^{x_v} = log phi_{active}. A zero probability at the
/// active index yields negative infinity rather than an error.
pub fn categorical_logpdf(onehot: &[f64], phi: &[f64]) -> Result<f64> {
    if onehot.len() != phi.len() {
        return Err(CftmError::domain(format!(
            "one-hot length {} does not match distribution length {}",
            onehot.len(),
            phi.len()
        )));
    }
    let mut active = None;
    for (i, &x) in onehot.iter().enumerate() {
        if x == 1.0 {
            if active.is_some() {
                return Err(CftmError::domain("indicator vector has more than one active entry"));
            }
            active = Some(i);
        } else if x != 0.0 {
            return Err(CftmError::domain(format!(
                "indicator vector entries must be 0 or 1, got {x}"
            )));
        }
    }
    let v = active.ok_or_else(|| CftmError::domain("indicator vector has no active entry"))?;
    Ok(phi[v].ln())
}

/// Inverse-CDF categorical draw; returns the 0-based index.
pub fn sample_categorical<R: Rng + ?Sized>(phi: &[f64], rng: &mut R) -> usize {
    debug_assert!(!phi.is_empty());
    debug_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in phi.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}
