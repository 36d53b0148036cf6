//! The generative machinery: SDE-driven parameter paths and synthetic corpus
//! generation with recorded ground truth.
//!
//! Topic logits alpha (one path per topic) and word logits beta (one path
//! per topic/word pair when evolving) follow
//!
//! ```text
//! d alpha_{s,k}   = f(alpha_{s,k}) ds   + sigma_alpha dB^{H,(k)}_s
//! d beta_{s,k,w}  = f(beta_{s,k,w}) ds  + sigma_beta  dB^{H,(k,w)}_s
//! ```
//!
//! with independent fBms. Under zero drift the solution is the exact
//! pathwise identity `alpha_s = alpha_0 + sigma * B^H_s`, evaluated with no
//! discretization error; nonzero drift falls back to Euler-Maruyama stepping
//! on the grid and is flagged experimental. Each token at a timestamp draws
//! a topic from `softmax(alpha_s)` and then a word from
//! `softmax(beta_{s,z})`.

mod simplex;

pub use simplex::{categorical_logpdf, log_sum_exp, sample_categorical, softmax};
pub(crate) use simplex::softmax_unchecked;

use ndarray::{Array2, Array3, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CftmError, Result};
use crate::fbm::{sample_fbm, FbmPath, HurstIndex, TimeGrid};
use crate::ingest::Corpus;
use crate::rng::RngStream;

/// Drift specification for the parameter SDEs. Zero drift is the supported
/// mode; the mean-reversion hook is experimental and solved by
/// Euler-Maruyama on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// Experimental: f(x) = -rate * (x - level).
    MeanReversion { rate: f64, level: f64 },
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec::Zero
    }
}

impl DriftSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, DriftSpec::Zero)
    }

    fn eval(&self, x: f64) -> f64 {
        match *self {
            DriftSpec::Zero => 0.0,
            DriftSpec::MeanReversion { rate, level } => -rate * (x - level),
        }
    }
}

/// Initial mean specification: a scalar broadcast over all components, a
/// flat per-component vector, or (for beta) a topics-by-words matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    PerComponent(Vec<f64>),
}

impl MeanSpec {
    pub fn resolve_vector(&self, len: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            MeanSpec::Scalar(v) => Ok(vec![*v; len]),
            MeanSpec::PerComponent(v) if v.len() == len => Ok(v.clone()),
            MeanSpec::PerComponent(v) => Err(CftmError::schema(
                field,
                format!("expected {len} components, got {}", v.len()),
            )),
            MeanSpec::Matrix(_) => {
                Err(CftmError::schema(field, "expected a scalar or flat vector, got a matrix"))
            }
        }
    }

    pub fn resolve_matrix(&self, rows: usize, cols: usize, field: &str) -> Result<Array2<f64>> {
        match self {
            MeanSpec::Scalar(v) => Ok(Array2::from_elem((rows, cols), *v)),
            MeanSpec::PerComponent(v) if v.len() == rows * cols => {
                Ok(Array2::from_shape_vec((rows, cols), v.clone()).expect("length checked"))
            }
            MeanSpec::PerComponent(v) => Err(CftmError::schema(
                field,
                format!("expected {rows}x{cols}={} components, got {}", rows * cols, v.len()),
            )),
            MeanSpec::Matrix(m) => {
                if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                    return Err(CftmError::schema(
                        field,
                        format!("expected a {rows}x{cols} matrix"),
                    ));
                }
                let flat: Vec<f64> = m.iter().flatten().copied().collect();
                Ok(Array2::from_shape_vec((rows, cols), flat).expect("shape checked"))
            }
        }
    }
}

/// Initial-distribution and diffusion parameters for one SDE family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeParams {
    pub mu: MeanSpec,
    /// Initial variance scale, strictly positive.
    pub nu: f64,
    /// Diffusion coefficient, constrained nonnegative: the law of
    /// sigma * B^H depends only on |sigma|.
    pub sigma: f64,
    #[serde(default)]
    pub drift: DriftSpec,
}

impl SdeParams {
    pub fn new(mu: MeanSpec, nu: f64, sigma: f64) -> Result<Self> {
        let params = SdeParams { mu, nu, sigma, drift: DriftSpec::Zero };
        params.validate("sde")?;
        Ok(params)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(CftmError::schema(
                format!("{field}.nu"),
                format!("initial variance must be positive, got {}", self.nu),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(CftmError::schema(
                format!("{field}.sigma"),
                format!("diffusion coefficient must be nonnegative, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Token budget per grid point: a constant or an explicit per-time list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountSpec {
    Constant(usize),
    PerTime(Vec<usize>),
}

impl Default for CountSpec {
    fn default() -> Self {
        CountSpec::Constant(200)
    }
}

impl CountSpec {
    pub fn resolve(&self, len: usize) -> Result<Vec<usize>> {
        let counts = match self {
            CountSpec::Constant(n) => vec![*n; len],
            CountSpec::PerTime(v) if v.len() == len => v.clone(),
            CountSpec::PerTime(v) => {
                return Err(CftmError::schema(
                    "tokens_per_time",
                    format!("expected {len} entries matching the grid, got {}", v.len()),
                ))
            }
        };
        if counts.iter().any(|&n| n == 0) {
            return Err(CftmError::schema(
                "tokens_per_time",
                "every grid point needs at least one token",
            ));
        }
        Ok(counts)
    }
}

/// Full model configuration for simulation and fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub h: HurstIndex,
    pub grid: TimeGrid,
    pub alpha: SdeParams,
    pub beta: SdeParams,
    #[serde(default)]
    pub beta_evolves: bool,
    #[serde(default)]
    pub tokens_per_time: CountSpec,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_topics < 1 {
            return Err(CftmError::schema("num_topics", "need at least one topic"));
        }
        if self.vocab_size < 2 {
            return Err(CftmError::schema("vocab_size", "need at least two words"));
        }
        self.alpha.validate("alpha")?;
        self.beta.validate("beta")?;
        self.alpha_mu()?;
        self.beta_mu()?;
        self.tokens_per_time.resolve(self.grid.len())?;
        Ok(())
    }

    pub fn alpha_mu(&self) -> Result<Vec<f64>> {
        self.alpha.mu.resolve_vector(self.num_topics, "alpha.mu")
    }

    pub fn beta_mu(&self) -> Result<Array2<f64>> {
        self.beta.mu.resolve_matrix(self.num_topics, self.vocab_size, "beta.mu")
    }

    pub fn tokens(&self) -> Result<Vec<usize>> {
        self.tokens_per_time.resolve(self.grid.len())
    }
}

/// Realized parameter trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamPath {
    /// (T+1) x K topic logits.
    pub alpha: Array2<f64>,
    pub beta: BetaPath,
}

/// Word logits: one static K x W matrix, or a (T+1) x K x W array when the
/// word distributions evolve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPath {
    Static(Array2<f64>),
    Evolving(Array3<f64>),
}

impl BetaPath {
    pub fn at(&self, t: usize) -> ArrayView2<'_, f64> {
        match self {
            BetaPath::Static(m) => m.view(),
            BetaPath::Evolving(a) => a.index_axis(ndarray::Axis(0), t),
        }
    }

    pub fn evolves(&self) -> bool {
        matches!(self, BetaPath::Evolving(_))
    }
}

impl ParamPath {
    /// softmax(alpha_t): the topic distribution at grid index t.
    pub fn topic_dist(&self, t: usize) -> Vec<f64> {
        softmax_unchecked(self.alpha.row(t).as_slice().expect("contiguous row"))
    }

    /// softmax(beta_{t,k}): the word distribution of topic k (0-based) at
    /// grid index t.
    pub fn word_dist(&self, t: usize, k: usize) -> Vec<f64> {
        let beta_t = self.beta.at(t);
        let row: Vec<f64> = beta_t.row(k).iter().copied().collect();
        softmax_unchecked(&row)
    }
}

/// Independent fBm inputs to the SDEs: one path per topic for alpha, one per
/// (topic, word) pair (row-major) for beta when it evolves.
#[derive(Debug, Clone)]
pub struct FbmDraws {
    pub alpha: Vec<FbmPath>,
    pub beta: Option<Vec<FbmPath>>,
}

/// Stream layout under a corpus seed: initial values, then one stream per
/// fBm, then token sampling.
const STREAM_INITIAL: u64 = 0;
const STREAM_FBM_BASE: u64 = 1;

fn token_stream(config: &ModelConfig) -> u64 {
    STREAM_FBM_BASE + (config.num_topics + config.num_topics * config.vocab_size) as u64
}

/// Draw the fBm inputs for a config from derived substreams.
pub fn draw_fbms(config: &ModelConfig, stream: RngStream) -> Result<FbmDraws> {
    let k = config.num_topics;
    let w = config.vocab_size;
    let mut alpha = Vec::with_capacity(k);
    for i in 0..k {
        alpha.push(sample_fbm(&config.grid, config.h, stream.with_stream(STREAM_FBM_BASE + i as u64))?);
    }
    let beta = if config.beta_evolves {
        let mut paths = Vec::with_capacity(k * w);
        for i in 0..k * w {
            paths.push(sample_fbm(
                &config.grid,
                config.h,
                stream.with_stream(STREAM_FBM_BASE + (k + i) as u64),
            )?);
        }
        Some(paths)
    } else {
        None
    };
    Ok(FbmDraws { alpha, beta })
}

/// Solve the parameter SDEs against supplied fBm draws. Initial values are
/// drawn from `rng`: alpha_0 ~ N(mu_alpha, nu_alpha I) first, then
/// beta_0 ~ N(mu_beta, nu_beta I) in row-major order.
///
/// Zero drift uses the exact pathwise identity at every grid point; nonzero
/// drift steps with Euler-Maruyama.
pub fn solve_paths<R: Rng + ?Sized>(
    config: &ModelConfig,
    draws: &FbmDraws,
    rng: &mut R,
) -> Result<ParamPath> {
    config.validate()?;
    let k = config.num_topics;
    let w = config.vocab_size;
    let n_times = config.grid.len();

    if draws.alpha.len() != k {
        return Err(CftmError::domain(format!(
            "need one alpha fBm per topic: expected {k}, got {}",
            draws.alpha.len()
        )));
    }
    for p in &draws.alpha {
        if p.grid != config.grid {
            return Err(CftmError::domain("alpha fBm grid does not match the config grid"));
        }
    }

    let mu_alpha = config.alpha_mu()?;
    let sd_alpha0 = config.alpha.nu.sqrt();
    let alpha0: Vec<f64> =
        (0..k).map(|i| mu_alpha[i] + sd_alpha0 * rng.sample::<f64, _>(StandardNormal)).collect();

    let mu_beta = config.beta_mu()?;
    let sd_beta0 = config.beta.nu.sqrt();
    let mut beta0 = Array2::<f64>::zeros((k, w));
    for i in 0..k {
        for j in 0..w {
            beta0[[i, j]] = mu_beta[[i, j]] + sd_beta0 * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let mut alpha = Array2::<f64>::zeros((n_times, k));
    for i in 0..k {
        let path = integrate_sde(
            alpha0[i],
            &draws.alpha[i],
            config.alpha.sigma,
            config.alpha.drift,
            config.grid.points(),
        )?;
        for t in 0..n_times {
            alpha[[t, i]] = path[t];
        }
    }

    let beta = if config.beta_evolves {
        let paths = draws.beta.as_ref().ok_or_else(|| {
            CftmError::domain("beta evolves but no beta fBm draws were supplied")
        })?;
        if paths.len() != k * w {
            return Err(CftmError::domain(format!(
                "need one beta fBm per (topic, word) pair: expected {}, got {}",
                k * w,
                paths.len()
            )));
        }
        let mut cube = Array3::<f64>::zeros((n_times, k, w));
        for i in 0..k {
            for j in 0..w {
                let path = integrate_sde(
                    beta0[[i, j]],
                    &paths[i * w + j],
                    config.beta.sigma,
                    config.beta.drift,
                    config.grid.points(),
                )?;
                for t in 0..n_times {
                    cube[[t, i, j]] = path[t];
                }
            }
        }
        BetaPath::Evolving(cube)
    } else {
        BetaPath::Static(beta0)
    };

    Ok(ParamPath { alpha, beta })
}

fn integrate_sde(
    x0: f64,
    fbm: &FbmPath,
    sigma: f64,
    drift: DriftSpec,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    if drift.is_zero() {
        // Exact: x_s = x_0 + sigma * B_s at every grid point.
        for t in 0..grid.len() {
            out.push(x0 + sigma * fbm.values[t]);
        }
    } else {
        let mut x = x0;
        out.push(x);
        for t in 1..grid.len() {
            let dt = grid[t] - grid[t - 1];
            let db = fbm.values[t] - fbm.values[t - 1];
            x += drift.eval(x) * dt + sigma * db;
            if !x.is_finite() {
                return Err(CftmError::numerical(format!(
                    "drift produced a non-finite path value at grid point {t}"
                )));
            }
            out.push(x);
        }
    }
    Ok(out)
}

/// Draw fBms and initial values from substreams of `stream` and solve.
pub fn sample_param_paths(config: &ModelConfig, stream: RngStream) -> Result<ParamPath> {
    let draws = draw_fbms(config, stream)?;
    let mut init_rng = stream.with_stream(STREAM_INITIAL).rng();
    solve_paths(config, &draws, &mut init_rng)
}

/// A generated corpus together with everything needed to score recovery:
/// the true paths, token-topic assignments, and the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: ParamPath,
    /// Per timestamp, per token: the 1-based topic that generated it.
    pub assignments: Vec<Vec<u32>>,
    pub seed: u64,
    pub config: ModelConfig,
}

/// Generate a corpus from freshly sampled parameter paths.
pub fn generate_corpus(config: &ModelConfig, stream: RngStream) -> Result<SyntheticCorpus> {
    let truth = sample_param_paths(config, stream)?;
    generate_corpus_from_paths(config, truth, stream)
}

/// Generate tokens against externally supplied paths (used for engineered
/// ground truth). Token draws come from the same substream layout as
/// `generate_corpus`.
pub fn generate_corpus_from_paths(
    config: &ModelConfig,
    truth: ParamPath,
    stream: RngStream,
) -> Result<SyntheticCorpus> {
    config.validate()?;
    let tokens_per_time = config.tokens()?;
    let n_times = config.grid.len();
    if truth.alpha.nrows() != n_times || truth.alpha.ncols() != config.num_topics {
        return Err(CftmError::domain("truth alpha path shape does not match the config"));
    }

    let mut rng = stream.with_stream(token_stream(config)).rng();
    let mut bags: Vec<Vec<u32>> = Vec::with_capacity(n_times);
    let mut assignments: Vec<Vec<u32>> = Vec::with_capacity(n_times);
    for t in 0..n_times {
        let theta = truth.topic_dist(t);
        let word_dists: Vec<Vec<f64>> =
            (0..config.num_topics).map(|k| truth.word_dist(t, k)).collect();
        let mut bag = Vec::with_capacity(tokens_per_time[t]);
        let mut zs = Vec::with_capacity(tokens_per_time[t]);
        for _ in 0..tokens_per_time[t] {
            let z = sample_categorical(&theta, &mut rng);
            let w = sample_categorical(&word_dists[z], &mut rng);
            zs.push((z + 1) as u32);
            bag.push((w + 1) as u32);
        }
        bags.push(bag);
        assignments.push(zs);
    }

    let corpus = Corpus {
        grid: config.grid.clone(),
        bags,
        doc_counts: vec![1; n_times],
    };
    Ok(SyntheticCorpus { corpus, truth, assignments, seed: stream.seed, config: config.clone() })
}
