//! Verification harness: exhaustive small-instance oracles and seeded Monte
//! Carlo estimator risk.
//!
//! The minimax risk itself is not computable. Simulation only certifies that
//! each computed lower bound sits below the achieved risk of the estimators
//! tried, up to a 99% confidence interval.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::continuum::Z_99;
use crate::discrete::{fano_conditional_form, fano_tail_lower_bound, neighborhood_sizes, DiscreteSpace};
use crate::error::{domain, Error, Result};
use crate::info::{
    conditional_entropy_given_observation, mutual_information_exact, MarkovChainSpec, ProbVector, StochasticMatrix,
};
use crate::minimax::{
    default_eps_grid, linear_regression_bound, normal_mean_bound, normal_mean_tail_bound, sparse_location_bound,
    sparse_location_grid_center, NormalMeanMode,
};
use crate::rng::{domain as streams, substream};

/// Largest `|V|^|X|` that [`enumerate_decoders_min_tail`] will walk.
pub const DECODER_ENUMERATION_LIMIT: f64 = 1e6;

/// Default replicates per work unit.
pub const DEFAULT_CHUNK_SIZE: u64 = 1024;

fn dirichlet_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn dirichlet_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<StochasticMatrix> {
    StochasticMatrix::from_rows((0..rows).map(|_| dirichlet_row(rng, cols)).collect())
}

/// Chain `V -> X -> V̂` with prior, channel and decoder rows drawn from the
/// flat Dirichlet. `sizes` is `(|V|, |X|, |V̂|)`.
pub fn random_chain(seed: u64, sizes: (usize, usize, usize)) -> Result<MarkovChainSpec> {
    let (nv, nx, nh) = sizes;
    if nv < 2 || nx < 1 || nh < 1 {
        return Err(domain(format!("chain sizes {sizes:?} need |V| >= 2 and |X|, |V̂| >= 1")));
    }
    let mut rng = substream(seed, streams::CHAIN, 0);
    let prior = ProbVector::new(dirichlet_row(&mut rng, nv))?;
    let channel = dirichlet_matrix(&mut rng, nv, nx)?;
    let decoder = dirichlet_matrix(&mut rng, nx, nh)?;
    MarkovChainSpec::new(prior, channel, decoder)
}

/// `k` points with a symmetric distance table: zero diagonal, off-diagonal
/// entries uniform on `(0, 1)`.
pub fn random_symmetric_space(seed: u64, k: usize) -> Result<DiscreteSpace> {
    let mut rng = substream(seed, streams::SPACE, 0);
    let mut table = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let x: f64 = rng.random();
            table[i * k + j] = x;
            table[j * k + i] = x;
        }
    }
    DiscreteSpace::from_table(k, table)
}

/// Exact `min_f P(rho(f(X), V) > t)` over every map `f: X -> V`, by
/// enumerating all `|V|^|X|` decoders.
pub fn enumerate_decoders_min_tail(
    prior: &ProbVector,
    channel: &StochasticMatrix,
    space: &DiscreteSpace,
    t: f64,
) -> Result<f64> {
    let (nv, nx) = (prior.len(), channel.cols());
    if channel.rows() != nv {
        return Err(Error::DimensionMismatch {
            expected: nv,
            got: channel.rows(),
        });
    }
    if space.len() != nv {
        return Err(Error::AlphabetMismatch(format!(
            "space has {} points, prior has {nv}",
            space.len()
        )));
    }
    let needed = (nv as f64).powi(nx as i32);
    if needed > DECODER_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            what: "decoder enumeration",
            needed,
            limit: DECODER_ENUMERATION_LIMIT,
            hint: "shrink |V| or |X|",
        });
    }
    // cost[x][h] = P(X = x, rho(h, V) > t)
    let mut cost = vec![0.0; nx * nv];
    for x in 0..nx {
        for h in 0..nv {
            cost[x * nv + h] = (0..nv)
                .filter(|&v| space.rho(h, v) > t)
                .map(|v| prior.as_slice()[v] * channel.get(v, x))
                .sum();
        }
    }
    let mut decoder = vec![0usize; nx];
    let mut best = f64::INFINITY;
    loop {
        let tail: f64 = decoder.iter().enumerate().map(|(x, &h)| cost[x * nv + h]).sum();
        best = best.min(tail);
        let mut x = 0;
        loop {
            if x == nx {
                return Ok(best.clamp(0.0, 1.0));
            }
            decoder[x] += 1;
            if decoder[x] < nv {
                break;
            }
            decoder[x] = 0;
            x += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// `s`-sparse mean of `N(theta, sigma2 I_d)`, `n` samples.
    SparseLocation,
    /// Mean of `N(theta, sigma2 I_d)`, `n` samples.
    NormalMean,
    /// `Y = X theta + noise` with a `d x d` design `sqrt(n) I`.
    Regression,
    /// Uniform `V` on `d` symbols seen through a random `d x s` channel.
    DiscreteChain,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::SparseLocation => "sparse-location",
            Problem::NormalMean => "normal-mean",
            Problem::Regression => "regression",
            Problem::DiscreteChain => "discrete-chain",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse-location" => Ok(Self::SparseLocation),
            "normal-mean" => Ok(Self::NormalMean),
            "regression" => Ok(Self::Regression),
            "discrete-chain" => Ok(Self::DiscreteChain),
            other => Err(Error::Unknown {
                kind: "problem",
                name: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    SampleMean,
    /// Keeps coordinates above the threshold.
    HardThreshold,
    /// Shrinks coordinates toward zero by the threshold.
    SoftThreshold,
    Ols,
    /// Posterior mode of `V` given `X`.
    Map,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::SampleMean => "sample-mean",
            EstimatorKind::HardThreshold => "hard-threshold",
            EstimatorKind::SoftThreshold => "soft-threshold",
            EstimatorKind::Ols => "ols",
            EstimatorKind::Map => "map",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample-mean" => Ok(Self::SampleMean),
            "hard-threshold" => Ok(Self::HardThreshold),
            "soft-threshold" => Ok(Self::SoftThreshold),
            "ols" => Ok(Self::Ols),
            "map" => Ok(Self::Map),
            other => Err(Error::Unknown {
                kind: "estimator",
                name: other.into(),
            }),
        }
    }
}

/// Law of the true parameter across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Prior {
    /// Same parameter every replicate.
    Fixed { theta: Vec<f64> },
    /// Uniform on the radius-`radius` Euclidean ball.
    Ball { radius: f64 },
    /// `eps` times a uniform point of the `s`-sparse sign set.
    SparseSign { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub d: u64,
    pub s: u64,
    pub n: u64,
    pub sigma2: f64,
    pub estimator: EstimatorKind,
    /// Threshold for the thresholding estimators; `sigma sqrt(2 ln d / n)` when unset.
    pub threshold: Option<f64>,
    /// Parameter law; a problem-specific default when unset.
    pub prior: Option<Prior>,
    pub reps: u64,
    pub seed: u64,
    /// Radii for empirical tail probabilities `P(rho > t)`.
    pub t_list: Vec<f64>,
    pub chunk_size: u64,
}

impl ExperimentConfig {
    pub fn new(problem: Problem, estimator: EstimatorKind) -> Self {
        Self {
            problem,
            d: 10,
            s: 1,
            n: 100,
            sigma2: 1.0,
            estimator,
            threshold: None,
            prior: None,
            reps: 10_000,
            seed: 0,
            t_list: Vec::new(),
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(domain("reps must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(domain("chunk_size must be at least 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.n == 0 {
            return Err(domain("n must be at least 1"));
        }
        if let Some(t) = self.t_list.iter().find(|t| !(**t >= 0.0)) {
            return Err(domain(format!("radii must be nonnegative, got {t}")));
        }
        if let Some(th) = self.threshold {
            if !(th >= 0.0) {
                return Err(domain(format!("threshold must be nonnegative, got {th}")));
            }
        }
        let allowed: &[EstimatorKind] = match self.problem {
            Problem::SparseLocation | Problem::NormalMean => &[
                EstimatorKind::SampleMean,
                EstimatorKind::HardThreshold,
                EstimatorKind::SoftThreshold,
            ],
            Problem::Regression => &[EstimatorKind::Ols],
            Problem::DiscreteChain => &[EstimatorKind::Map],
        };
        if !allowed.contains(&self.estimator) {
            return Err(domain(format!(
                "estimator {} does not apply to {}",
                self.estimator, self.problem
            )));
        }
        match self.problem {
            Problem::SparseLocation if self.s == 0 || 2 * self.s > self.d => Err(domain(format!(
                "sparse-location needs 1 <= s <= d/2, got d = {}, s = {}",
                self.d, self.s
            ))),
            Problem::NormalMean | Problem::Regression if self.d < 2 => {
                Err(domain(format!("{} needs d >= 2, got {}", self.problem, self.d)))
            }
            Problem::DiscreteChain if self.d < 2 || self.s < 1 || (self.d as f64) * (self.s as f64) > 1e6 => {
                Err(domain("discrete-chain needs d >= 2 symbols, s >= 1 outputs, d * s <= 1e6"))
            }
            _ => Ok(()),
        }
    }
}

/// Normal-approximation 99% interval for a mean loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Clopper-Pearson 99% interval for `P(rho > t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub hits: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Which empirical quantity a bound is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Target {
    Risk,
    Tail { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedBound {
    pub label: String,
    pub target: Target,
    pub value: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub label: String,
    pub bound: f64,
    pub ci_upper: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub config: ExperimentConfig,
    pub prior: Prior,
    pub empirical_risk: MeanEstimate,
    pub tail_probs: Vec<TailEstimate>,
    pub bound_values: Vec<MatchedBound>,
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

/// Two-sided 99% Clopper-Pearson interval for `hits` out of `trials`.
pub fn clopper_pearson(hits: u64, trials: u64) -> (f64, f64) {
    let alpha = 1.0 - 0.99;
    let (k, n) = (hits as f64, trials as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map(|b| b.inverse_cdf(alpha / 2.0)).unwrap_or(0.0)
    };
    let upper = if hits >= trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map(|b| b.inverse_cdf(1.0 - alpha / 2.0)).unwrap_or(1.0)
    };
    (lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0))
}

/// Running count, mean and centered sum of squares of the loss, plus tail hits.
#[derive(Debug, Clone)]
struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
    hits: Vec<u64>,
}

impl Accumulator {
    fn new(tails: usize) -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            hits: vec![0; tails],
        }
    }

    fn push(&mut self, loss: f64, distance: f64, t_list: &[f64]) {
        self.count += 1;
        let delta = loss - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (loss - self.mean);
        for (h, &t) in self.hits.iter_mut().zip(t_list) {
            if distance > t {
                *h += 1;
            }
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        let mean = a.mean + delta * b.count as f64 / count as f64;
        let m2 = a.m2 + b.m2 + delta * delta * (a.count as f64 * b.count as f64) / count as f64;
        let hits = a.hits.iter().zip(&b.hits).map(|(x, y)| x + y).collect();
        Self { count, mean, m2, hits }
    }
}

/// Fixed-shape pairwise reduction, independent of thread scheduling.
fn pairwise_merge(mut parts: Vec<Accumulator>) -> Accumulator {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => Accumulator::merge(a, b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

fn normal_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn sample_prior(prior: &Prior, d: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match prior {
        Prior::Fixed { theta } => theta.clone(),
        Prior::Ball { radius } => {
            let dir = normal_vec(rng, d, 1.0);
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / d as f64) / norm;
            dir.into_iter().map(|x| x * scale).collect()
        }
        Prior::SparseSign { eps } => {
            // Partial Fisher-Yates for the support, then independent signs.
            let mut idx: Vec<usize> = (0..d).collect();
            let mut theta = vec![0.0; d];
            for i in 0..s {
                let j = rng.random_range(i..d);
                idx.swap(i, j);
                theta[idx[i]] = if rng.random::<bool>() { *eps } else { -*eps };
            }
            theta
        }
    }
}

fn threshold_apply(kind: EstimatorKind, x: &mut [f64], lambda: f64) {
    match kind {
        EstimatorKind::HardThreshold => {
            for v in x.iter_mut() {
                if v.abs() <= lambda {
                    *v = 0.0;
                }
            }
        }
        EstimatorKind::SoftThreshold => {
            for v in x.iter_mut() {
                *v = v.signum() * (v.abs() - lambda).max(0.0);
            }
        }
        _ => {}
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `rows x cols` design with independent standard normal entries.
pub fn gaussian_design(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = substream(seed, streams::DESIGN, 0);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Random uniform-prior channel used by the discrete-chain problem.
pub fn discrete_chain_instance(seed: u64, symbols: usize, outputs: usize) -> Result<(ProbVector, StochasticMatrix)> {
    let mut rng = substream(seed, streams::CHAIN, 1);
    let channel = dirichlet_matrix(&mut rng, symbols, outputs)?;
    Ok((ProbVector::uniform(symbols)?, channel))
}

/// Bounds the report is checked against, and the parameter law used.
fn matched_bounds(config: &ExperimentConfig) -> Result<(Prior, Vec<MatchedBound>, BTreeMap<String, f64>)> {
    let mut bounds = Vec::new();
    let mut aux = BTreeMap::new();
    let d = config.d as usize;
    let prior = match config.problem {
        Problem::SparseLocation => {
            let grid = default_eps_grid(sparse_location_grid_center(config.d, config.s, config.sigma2, config.n));
            let b = sparse_location_bound(config.d, config.s, config.sigma2, config.n, &grid)?;
            bounds.push(MatchedBound {
                label: "sparse-location".into(),
                target: Target::Risk,
                value: b.value,
                valid: b.valid,
            });
            let eps = b.eps.unwrap_or(0.0);
            aux.insert("eps".into(), eps);
            config.prior.clone().unwrap_or(Prior::SparseSign { eps })
        }
        Problem::NormalMean => {
            for mode in [NormalMeanMode::Integrated, NormalMeanMode::Simple] {
                let b = normal_mean_bound(config.d, config.sigma2, config.n, mode)?;
                bounds.push(MatchedBound {
                    label: b.pipeline.to_string(),
                    target: Target::Risk,
                    value: b.value,
                    valid: b.valid,
                });
            }
            let prior = config.prior.clone().unwrap_or(Prior::Fixed { theta: vec![0.0; d] });
            if let Prior::Ball { radius } = prior {
                for &t in &config.t_list {
                    if t > 0.0 && t <= radius {
                        let b = normal_mean_tail_bound(config.d, config.sigma2, config.n, radius, t)?;
                        bounds.push(MatchedBound {
                            label: format!("continuum-tail@{t}"),
                            target: Target::Tail { t },
                            value: b.value,
                            valid: b.valid,
                        });
                    }
                }
            }
            prior
        }
        Problem::Regression => {
            let x = DMatrix::<f64>::identity(d, d) * (config.n as f64).sqrt();
            let b = linear_regression_bound(&x, config.sigma2)?;
            bounds.push(MatchedBound {
                label: "linear-regression".into(),
                target: Target::Risk,
                value: b.value,
                valid: b.valid,
            });
            bounds.push(MatchedBound {
                label: "linear-regression-exact".into(),
                target: Target::Risk,
                value: b.aux["exact_form"],
                valid: b.valid,
            });
            config.prior.clone().unwrap_or(Prior::Fixed { theta: vec![0.0; d] })
        }
        Problem::DiscreteChain => {
            let (prior, channel) = discrete_chain_instance(config.seed, d, config.s as usize)?;
            let space = DiscreteSpace::zero_one(d)?;
            let profile = neighborhood_sizes(&space, 0.0)?;
            let mi = mutual_information_exact(&prior, &channel)?;
            let hvx = conditional_entropy_given_observation(&prior, &channel)?;
            let tail = fano_tail_lower_bound(config.d, &profile, mi)?;
            let cond = fano_conditional_form(hvx, config.d, &profile)?;
            for (label, b) in [("fano-tail", tail), ("fano-conditional", cond)] {
                bounds.push(MatchedBound {
                    label: label.into(),
                    target: Target::Tail { t: 0.0 },
                    value: b.value,
                    valid: b.valid,
                });
            }
            aux.insert("mutual_information".into(), mi);
            Prior::Fixed { theta: Vec::new() }
        }
    };
    Ok((prior, bounds, aux))
}

/// One replicate: returns (loss, distance used for tails).
type ReplicateFn<'a> = dyn Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync + 'a;

/// Simulates the configured estimator and matches the empirical risk and
/// tails against every applicable lower bound.
///
/// Replicate `i` draws from substream `(seed, i)`; chunks of `chunk_size`
/// replicates are merged pairwise in index order, so the report is
/// bit-identical for a fixed config.
pub fn simulate_risk(config: &ExperimentConfig) -> Result<RiskReport> {
    config.validate()?;
    let (prior, bound_values, mut aux) = matched_bounds(config)?;
    let d = config.d as usize;
    let s = config.s as usize;
    let n = config.n as usize;
    let sigma = config.sigma2.sqrt();
    let lambda = config
        .threshold
        .unwrap_or_else(|| sigma * (2.0 * (config.d as f64).ln() / config.n as f64).sqrt());
    if let Prior::Fixed { theta } = &prior {
        if config.problem != Problem::DiscreteChain && theta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta.len(),
            });
        }
    }

    let chain = if config.problem == Problem::DiscreteChain {
        Some(discrete_chain_instance(config.seed, d, s)?)
    } else {
        None
    };
    let design = if config.problem == Problem::Regression {
        let x = DMatrix::<f64>::identity(d, d) * (config.n as f64).sqrt();
        let xtx = x.transpose() * &x;
        let pinv = xtx
            .try_inverse()
            .ok_or(Error::RankDeficient(0.0))?
            * x.transpose();
        Some((x, pinv))
    } else {
        None
    };

    let prior_ref = &prior;
    let replicate: Box<ReplicateFn> = match config.problem {
        Problem::SparseLocation | Problem::NormalMean => Box::new(|rng: &mut ChaCha8Rng| {
            let theta = sample_prior(prior_ref, d, s, rng);
            let mut mean = vec![0.0; d];
            for _ in 0..n {
                for (m, th) in mean.iter_mut().zip(&theta) {
                    let z: f64 = StandardNormal.sample(rng);
                    *m += th + sigma * z;
                }
            }
            for m in mean.iter_mut() {
                *m /= n as f64;
            }
            threshold_apply(config.estimator, &mut mean, lambda);
            let loss = sq_dist(&mean, &theta);
            (loss, loss.sqrt())
        }),
        Problem::Regression => {
            let (x, pinv) = design.as_ref().expect("design built above");
            Box::new(move |rng: &mut ChaCha8Rng| {
                let theta = DVector::from_vec(sample_prior(prior_ref, d, s, rng));
                let noise = DVector::from_vec(normal_vec(rng, x.nrows(), sigma));
                let y = x * &theta + noise;
                let est = pinv * y;
                let loss = (est - theta).norm_squared();
                (loss, loss.sqrt())
            })
        }
        Problem::DiscreteChain => {
            let (pv, channel) = chain.as_ref().expect("chain built above");
            // MAP decoder under the uniform prior: argmax_v W(x | v), lowest index on ties.
            let decode: Vec<usize> = (0..channel.cols())
                .map(|x| {
                    (0..d).fold(0, |best, v| if channel.get(v, x) > channel.get(best, x) { v } else { best })
                })
                .collect();
            let cdf: Vec<Vec<f64>> = (0..d)
                .map(|v| {
                    channel
                        .row(v)
                        .iter()
                        .scan(0.0, |acc, p| {
                            *acc += p;
                            Some(*acc)
                        })
                        .collect()
                })
                .collect();
            let prior_cdf: Vec<f64> = pv
                .as_slice()
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            Box::new(move |rng: &mut ChaCha8Rng| {
                let pick = |cdf: &[f64], u: f64| cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
                let v = pick(&prior_cdf, rng.random());
                let x = pick(&cdf[v], rng.random());
                let err = if decode[x] == v { 0.0 } else { 1.0 };
                (err, err)
            })
        }
    };

    // The discrete chain always reports the error rate, the tail at t = 0.
    let mut t_list = config.t_list.clone();
    if config.problem == Problem::DiscreteChain && !t_list.contains(&0.0) {
        t_list.push(0.0);
    }
    let reps = config.reps;
    let chunk = config.chunk_size;
    let n_chunks = reps.div_ceil(chunk);
    let parts: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(t_list.len());
            let start = c * chunk;
            for i in start..(start + chunk).min(reps) {
                let mut rng = substream(config.seed, streams::REPLICATE, i);
                let (loss, dist) = replicate(&mut rng);
                acc.push(loss, dist, &t_list);
            }
            acc
        })
        .collect();
    let acc = pairwise_merge(parts);
    drop(replicate);

    let empirical_risk = if acc.count < 2 {
        MeanEstimate {
            mean: acc.mean,
            std_error: f64::INFINITY,
            lower: 0.0,
            upper: f64::INFINITY,
        }
    } else {
        let se = (acc.m2 / (acc.count - 1) as f64 / acc.count as f64).sqrt();
        MeanEstimate {
            mean: acc.mean,
            std_error: se,
            lower: (acc.mean - Z_99 * se).max(0.0),
            upper: acc.mean + Z_99 * se,
        }
    };
    let tail_probs: Vec<TailEstimate> = t_list
        .iter()
        .zip(&acc.hits)
        .map(|(&t, &hits)| {
            let (lower, upper) = clopper_pearson(hits, acc.count);
            TailEstimate {
                t,
                hits,
                trials: acc.count,
                p_hat: hits as f64 / acc.count as f64,
                lower,
                upper,
            }
        })
        .collect();
    aux.insert("threshold".into(), lambda);

    let mut report = RiskReport {
        config: config.clone(),
        prior,
        empirical_risk,
        tail_probs,
        bound_values,
        violations: Vec::new(),
        aux,
    };
    report.violations = check_bounds(&report).violations;
    Ok(report)
}

/// Per-bound margin `ci_upper - bound`; negative means a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub pass: bool,
    pub margins: Vec<(String, f64)>,
    pub violations: Vec<Violation>,
}

impl BoundCheck {
    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min)
    }
}

/// Fails iff some bound exceeds the 99% upper endpoint of its matched
/// empirical quantity. Bounds whose target was not simulated are skipped.
pub fn check_bounds(report: &RiskReport) -> BoundCheck {
    let mut margins = Vec::new();
    let mut violations = Vec::new();
    for b in &report.bound_values {
        let upper = match b.target {
            Target::Risk => Some(report.empirical_risk.upper),
            Target::Tail { t } => report.tail_probs.iter().find(|tp| tp.t == t).map(|tp| tp.upper),
        };
        let Some(upper) = upper else { continue };
        let margin = upper - b.value;
        margins.push((b.label.clone(), margin));
        if margin < 0.0 {
            violations.push(Violation {
                label: b.label.clone(),
                bound: b.value,
                ci_upper: upper,
                excess: -margin,
            });
        }
    }
    BoundCheck {
        pass: violations.is_empty(),
        margins,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::fano_inequality_sides;

    #[test]
    fn chains_are_deterministic_and_normalized() {
        let a = random_chain(7, (2, 2, 2)).unwrap();
        assert_eq!(a, random_chain(7, (2, 2, 2)).unwrap());
        assert_ne!(a, random_chain(8, (2, 2, 2)).unwrap());
        for r in 0..2 {
            assert!((a.channel.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_chains_satisfy_the_inequality() {
        for i in 0..200u64 {
            let k = 2 + (i % 4) as usize;
            let chain = random_chain(i, (k, 3, k)).unwrap();
            let space = random_symmetric_space(i, k).unwrap();
            for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let sides = fano_inequality_sides(&chain, &space, t).unwrap();
                assert!(sides.slack() >= -1e-9, "seed {i} t {t}: {sides:?}");
            }
        }
    }

    #[test]
    fn decoder_enumeration_trivial_cases() {
        let space = DiscreteSpace::zero_one(3).unwrap();
        let prior = ProbVector::uniform(3).unwrap();
        let noiseless = StochasticMatrix::identity(3);
        assert_eq!(enumerate_decoders_min_tail(&prior, &noiseless, &space, 0.0).unwrap(), 0.0);
        let flat = StochasticMatrix::constant(3, &ProbVector::uniform(4).unwrap());
        let v = enumerate_decoders_min_tail(&prior, &flat, &space, 0.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let big = StochasticMatrix::constant(10, &ProbVector::uniform(7).unwrap());
        let space10 = DiscreteSpace::zero_one(10).unwrap();
        let prior10 = ProbVector::uniform(10).unwrap();
        assert!(enumerate_decoders_min_tail(&prior10, &big, &space10, 0.0).is_err());
    }

    #[test]
    fn decoder_enumeration_matches_per_observation_minimum() {
        for seed in 0..30u64 {
            let chain = random_chain(seed, (3, 3, 3)).unwrap();
            let space = random_symmetric_space(seed, 3).unwrap();
            let t = 0.5;
            let brute = enumerate_decoders_min_tail(&chain.prior, &chain.channel, &space, t).unwrap();
            let mut per_x = 0.0;
            for x in 0..3 {
                per_x += (0..3)
                    .map(|h| {
                        (0..3)
                            .filter(|&v| space.rho(h, v) > t)
                            .map(|v| chain.prior.as_slice()[v] * chain.channel.get(v, x))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
            }
            assert!((brute - per_x).abs() < 1e-15);
        }
    }

    #[test]
    fn clopper_pearson_edges() {
        assert_eq!(clopper_pearson(0, 10).0, 0.0);
        assert_eq!(clopper_pearson(10, 10).1, 1.0);
        // Closed form for zero hits: 1 - (alpha/2)^(1/n).
        let (_, up) = clopper_pearson(0, 10);
        assert!((up - (1.0 - 0.005f64.powf(0.1))).abs() < 1e-10);
        let (lo, up) = clopper_pearson(50, 100);
        assert!(lo < 0.5 && up > 0.5 && (0.5 - lo - (up - 0.5)).abs() < 1e-10);
    }

    #[test]
    fn sample_mean_risk_and_determinism() {
        let mut cfg = ExperimentConfig::new(Problem::NormalMean, EstimatorKind::SampleMean);
        cfg.d = 4;
        cfg.n = 10;
        cfg.reps = 4000;
        cfg.seed = 3;
        let a = simulate_risk(&cfg).unwrap();
        assert!(a.empirical_risk.lower <= 0.4 && 0.4 <= a.empirical_risk.upper, "{:?}", a.empirical_risk);
        assert!(a.violations.is_empty());
        let b = simulate_risk(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        // Chunking never changes the result.
        let mut c = cfg.clone();
        c.chunk_size = 37;
        let c = simulate_risk(&c).unwrap();
        assert_eq!(a.tail_probs, c.tail_probs);
        assert!((a.empirical_risk.mean - c.empirical_risk.mean).abs() < 1e-12);
    }

    #[test]
    fn single_replicate_has_unbounded_interval() {
        let mut cfg = ExperimentConfig::new(Problem::NormalMean, EstimatorKind::SampleMean);
        cfg.reps = 1;
        let r = simulate_risk(&cfg).unwrap();
        assert_eq!(r.empirical_risk.upper, f64::INFINITY);
        assert!(check_bounds(&r).pass);
    }

    #[test]
    fn inflated_bound_is_caught() {
        let mut cfg = ExperimentConfig::new(Problem::NormalMean, EstimatorKind::SampleMean);
        cfg.reps = 2000;
        let mut r = simulate_risk(&cfg).unwrap();
        assert!(check_bounds(&r).pass);
        r.bound_values.push(MatchedBound {
            label: "inflated".into(),
            target: Target::Risk,
            value: 0.2,
            valid: true,
        });
        let check = check_bounds(&r);
        assert!(!check.pass);
        assert_eq!(check.violations[0].label, "inflated");
    }

    #[test]
    fn estimator_problem_mismatch_is_rejected() {
        let cfg = ExperimentConfig::new(Problem::Regression, EstimatorKind::SampleMean);
        assert!(simulate_risk(&cfg).is_err());
        assert!("lasso".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn discrete_chain_error_rate_dominates_fano() {
        let mut cfg = ExperimentConfig::new(Problem::DiscreteChain, EstimatorKind::Map);
        cfg.d = 6;
        cfg.s = 3;
        cfg.reps = 5000;
        let r = simulate_risk(&cfg).unwrap();
        assert!(r.tail_probs.iter().any(|tp| tp.t == 0.0));
        assert!(check_bounds(&r).pass, "{:?}", r.violations);
    }
}
