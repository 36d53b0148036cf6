//! Continuous-time fractional topic model.
//!
//! The generating parameters of a dynamic topic model are driven by
//! independent fractional Brownian motions, so topic and word distributions
//! inherit the long-term dependency (H > 1/2) or roughness (H < 1/2) of the
//! driving noise. This crate provides the pieces end to end:
//!
//! - [`fbm`]: exact fBm/fGn sampling, covariance construction, Hurst
//!   estimation;
//! - [`generative`]: softmax/categorical primitives, SDE-driven parameter
//!   paths, synthetic corpus generation with recorded ground truth;
//! - [`inference`]: Gibbs-within-elliptical-slice MCMC, Monte Carlo marginal
//!   likelihood, hyperparameter grid search, and the zero-drift/static
//!   equivalence check;
//! - [`diagnostics`]: long-term-dependency vs roughness classification,
//!   self-similarity checks, regularity transfer through softmax;
//! - [`ingest`]: JSONL corpus loading, vocabulary pruning, bag-of-words
//!   encoding;
//! - [`cli`]: the `cftm` binary's subcommands and run manifests.
//!
//! See the crate's `examples/` directory for one runnable example per major
//! capability.

pub mod diagnostics;
pub mod error;
pub mod fbm;
pub mod generative;
pub mod ingest;
mod linalg;
pub mod rng;

pub use error::{CftmError, Result};
pub use rng::RngStream;
