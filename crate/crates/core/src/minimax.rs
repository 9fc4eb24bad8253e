//! Minimax risk lower bounds built on the distance-based and continuum Fano
//! inequalities: the separation function, the generalized Fano minimax
//! bound, and computable non-asymptotic pipelines for sparse Gaussian
//! location, compressed sensing, normal mean and linear regression.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{continuum_fano_bound, Norm};
use crate::discrete::{
    fano_tail_lower_bound, ln_binomial, BoundResult, DiscreteSpace, NeighborhoodProfile, SparseSignSet,
    PAIR_ENUMERATION_LIMIT,
};
use crate::error::{domain, Error, Result};

/// Sparse sign sets up to this size get exact neighborhood counts in the
/// log-ratio; larger ones use the factorial relaxation.
pub const EXACT_LOG_RATIO_LIMIT: f64 = 1e6;

/// Points in the default log-spaced `eps` grid.
pub const DEFAULT_GRID_POINTS: usize = 64;

/// A nondecreasing loss `Phi: R+ -> R+`.
#[derive(Clone)]
pub enum Loss {
    /// `x^2`.
    Square,
    /// `x^p` for `p > 0`.
    Power(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Square => f.write_str("Square"),
            Loss::Power(p) => write!(f, "Power({p})"),
            Loss::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Loss {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Loss::Square => x * x,
            Loss::Power(p) => x.powf(*p),
            Loss::Custom(f) => f(x),
        }
    }

    /// Checks `Phi(0) >= 0` and monotonicity on a grid over `[0, 100]`.
    fn spot_check(&self) -> Result<()> {
        if let Loss::Power(p) = self {
            if !(*p > 0.0) {
                return Err(domain(format!("power loss needs p > 0, got {p}")));
            }
        }
        let mut prev = self.eval(0.0);
        if !(prev >= 0.0) {
            return Err(domain(format!("loss at 0 is {prev}, must be >= 0")));
        }
        for i in 1..=1000 {
            let x = 0.1 * i as f64;
            let y = self.eval(x);
            if !(y >= prev) {
                return Err(domain(format!("loss decreases near x = {x}")));
            }
            prev = y;
        }
        Ok(())
    }
}

/// Parameters `theta_v` indexed by a finite space, compared under a norm.
#[derive(Debug, Clone)]
pub struct ParamFamily {
    index: DiscreteSpace,
    thetas: Vec<Vec<f64>>,
    metric: Norm,
    loss: Loss,
}

impl ParamFamily {
    pub fn new(index: DiscreteSpace, thetas: Vec<Vec<f64>>, metric: Norm, loss: Loss) -> Result<Self> {
        if thetas.len() != index.len() {
            return Err(Error::DimensionMismatch {
                expected: index.len(),
                got: thetas.len(),
            });
        }
        let dim = thetas[0].len();
        if let Some(bad) = thetas.iter().find(|t| t.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        loss.spot_check()?;
        Ok(Self {
            index,
            thetas,
            metric,
            loss,
        })
    }

    /// `theta_v = eps * v` over an integer-vector index space.
    pub fn scaled_index(index: DiscreteSpace, eps: f64, metric: Norm, loss: Loss) -> Result<Self> {
        let thetas = index
            .points()
            .iter()
            .map(|p| p.iter().map(|&x| eps * x as f64).collect())
            .collect();
        Self::new(index, thetas, metric, loss)
    }

    pub fn index(&self) -> &DiscreteSpace {
        &self.index
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn param_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.metric.distance(a, b)
    }
}

/// Which computation produced a [`MinimaxBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    GeneralizedFano,
    SparseLocation,
    CompressedSensing,
    NormalMeanSimple,
    NormalMeanIntegrated,
    LinearRegression,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::GeneralizedFano => "generalized-fano",
            Pipeline::SparseLocation => "sparse-location",
            Pipeline::CompressedSensing => "compressed-sensing",
            Pipeline::NormalMeanSimple => "normal-mean-simple",
            Pipeline::NormalMeanIntegrated => "normal-mean-integrated",
            Pipeline::LinearRegression => "linear-regression",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A minimax risk lower bound, in loss units, with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxBound {
    pub pipeline: Pipeline,
    pub value: f64,
    pub valid: bool,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    pub mi_bound: Option<f64>,
    pub log_ratio: Option<f64>,
    /// `delta(t)` actually used in the loss factor.
    pub separation: Option<f64>,
    /// `value` divided by the rate the bound is stated against.
    pub implied_constant: Option<f64>,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

impl MinimaxBound {
    fn new(pipeline: Pipeline, value: f64, valid: bool) -> Self {
        Self {
            pipeline,
            value: if valid { value.max(0.0) } else { 0.0 },
            valid,
            t: None,
            eps: None,
            mi_bound: None,
            log_ratio: None,
            separation: None,
            implied_constant: None,
            aux: BTreeMap::new(),
        }
    }
}

/// `delta(t) = min { rho(theta_v, theta_w) : rho_V(v, w) > t }`, or `+inf`
/// when no pair is that far apart in the index space.
pub fn separation_delta(family: &ParamFamily, t: f64) -> Result<f64> {
    let n = family.index.len();
    let needed = n as f64 * n as f64;
    if needed > PAIR_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            what: "separation enumeration",
            needed,
            limit: PAIR_ENUMERATION_LIMIT,
            hint: "use SparseSignSet::min_sq_distance_beyond for sparse sign families",
        });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|v| {
            (0..n)
                .filter(|&w| family.index.rho(v, w) > t)
                .map(|w| family.param_distance(&family.thetas[v], &family.thetas[w]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min))
}

/// `Phi(delta(t) / 2) * max(0, 1 - (I + ln 2) / ln(card / N_t^max))`.
///
/// With `t = 0` and the 0-1 index metric this is the classical packing form.
pub fn generalized_fano_minimax(
    family: &ParamFamily,
    t: f64,
    mi: f64,
    card: u64,
    profile: &NeighborhoodProfile,
) -> Result<MinimaxBound> {
    let delta = separation_delta(family, t)?;
    let tail = fano_tail_lower_bound(card, profile, mi)?;
    Ok(from_tail(Pipeline::GeneralizedFano, family.loss(), delta, &tail, t))
}

fn from_tail(pipeline: Pipeline, loss: &Loss, delta: f64, tail: &BoundResult, t: f64) -> MinimaxBound {
    let value = if tail.value == 0.0 {
        0.0
    } else {
        loss.eval(delta / 2.0) * tail.value
    };
    let mut out = MinimaxBound::new(pipeline, value, tail.valid);
    out.t = Some(t);
    out.mi_bound = tail.mi_bound;
    out.log_ratio = tail.log_ratio;
    out.separation = Some(delta);
    out.aux.insert("tail_bound".into(), tail.value);
    out
}

/// Index chosen by `argmin_v rho(theta_v, theta_hat)`, lowest index on ties.
pub fn test_from_estimate(family: &ParamFamily, theta_hat: &[f64]) -> usize {
    let mut best = (0usize, f64::INFINITY);
    for (v, theta) in family.thetas.iter().enumerate() {
        let d = family.param_distance(theta, theta_hat);
        if d < best.1 {
            best = (v, d);
        }
    }
    best.0
}

/// Outcome of reducing one estimate to a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck {
    pub v_hat: usize,
    pub delta: f64,
    /// `rho(theta_hat, theta_v)` for the true index `v`.
    pub estimate_error: f64,
    /// `rho(theta_hat, theta_v) < delta(t) / 2`.
    pub premise: bool,
    /// `rho_V(v_hat, v) <= t`.
    pub conclusion: bool,
}

impl ReductionCheck {
    /// The implication premise => conclusion.
    pub fn holds(&self) -> bool {
        !self.premise || self.conclusion
    }
}

/// Applies the argmin test to `theta_hat` and checks that a small estimation
/// error forces a small index error.
pub fn reduce_estimator_to_test(
    theta_hat: &[f64],
    truth: usize,
    family: &ParamFamily,
    t: f64,
) -> Result<ReductionCheck> {
    if truth >= family.index.len() {
        return Err(domain(format!("true index {truth} outside the family")));
    }
    let delta = separation_delta(family, t)?;
    Ok(reduce_with_delta(theta_hat, truth, family, t, delta))
}

/// [`reduce_estimator_to_test`] with `delta(t)` precomputed.
pub fn reduce_with_delta(theta_hat: &[f64], truth: usize, family: &ParamFamily, t: f64, delta: f64) -> ReductionCheck {
    let v_hat = test_from_estimate(family, theta_hat);
    let estimate_error = family.param_distance(theta_hat, &family.thetas[truth]);
    ReductionCheck {
        v_hat,
        delta,
        estimate_error,
        premise: estimate_error < delta / 2.0,
        conclusion: family.index.rho(v_hat, truth) <= t,
    }
}

/// How the sparse sign log-ratio `ln(|V| / N_t^max)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogRatioSource {
    /// Exact neighborhood count.
    Exact,
    /// `ln(k! (d-k)! / (s! (d-s)!))` with `k = floor(s/4)`.
    FactorialRelaxation,
}

/// `ln(|V| / N_t^max)` at `t = floor(s/4)` for the sparse sign set.
pub fn sparse_sign_log_ratio(d: u64, s: u64) -> Result<(f64, u64, LogRatioSource)> {
    let set = SparseSignSet::new(d, s)?;
    let t = s / 4;
    let card = set.cardinality().map(|c| c as f64).unwrap_or(f64::INFINITY);
    if card <= EXACT_LOG_RATIO_LIMIT {
        Ok((set.ln_cardinality() - set.neighborhood_count(t).ln(), t, LogRatioSource::Exact))
    } else {
        Ok((ln_binomial(d, s) - ln_binomial(d, t), t, LogRatioSource::FactorialRelaxation))
    }
}

/// `eps` values whose squares are log-spaced over `[1e-3, 1e3] * center`.
pub fn default_eps_grid(center_eps_sq: f64) -> Vec<f64> {
    let k = DEFAULT_GRID_POINTS;
    (0..k)
        .map(|i| {
            let expo = -3.0 + 6.0 * i as f64 / (k - 1) as f64;
            (center_eps_sq * 10f64.powf(expo)).sqrt()
        })
        .collect()
}

/// Center of the default sparse-location grid, `sigma2 ln(d/s) / n`.
pub fn sparse_location_grid_center(d: u64, s: u64, sigma2: f64, n: u64) -> f64 {
    sigma2 * (d as f64 / s as f64).ln() / n as f64
}

/// Center of the default compressed-sensing grid, `sigma2 d ln(d/s) / |X|_F^2`.
pub fn compressed_sensing_grid_center(d: u64, s: u64, sigma2: f64, frob_sq: f64) -> f64 {
    sigma2 * d as f64 * (d as f64 / s as f64).ln() / frob_sq
}

/// `1/|V|^2 sum_{v,w} |v - w|^2 / 2` for `V` the sparse sign set: `V` is
/// centered with `E|V|^2 = s`, so the average is `s`.
pub fn sparse_sign_mean_pairwise_half_sq(s: u64) -> f64 {
    s as f64
}

fn check_sparse_args(d: u64, s: u64, sigma2: f64, eps_grid: &[f64]) -> Result<()> {
    if s == 0 || 2 * s > d {
        return Err(domain(format!("need 1 <= s <= d/2, got d = {d}, s = {s}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if eps_grid.is_empty() {
        return Err(domain("eps grid is empty"));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(domain(format!("eps grid values must be positive, got {e}")));
    }
    Ok(())
}

/// The sparse sign bound at one `eps`:
/// `(max(t,1) eps^2 / 4) * max(0, 1 - (mi + ln 2) / L)` with `mi = mi_per_eps_sq * eps^2`.
pub fn sparse_sign_bound_at(eps: f64, t: u64, log_ratio: f64, mi_per_eps_sq: f64) -> f64 {
    let factor = t.max(1) as f64 * eps * eps / 4.0;
    let tail = 1.0 - (mi_per_eps_sq * eps * eps + LN_2) / log_ratio;
    factor * tail.max(0.0)
}

fn sparse_sign_pipeline(
    pipeline: Pipeline,
    d: u64,
    s: u64,
    mi_per_eps_sq: f64,
    eps_grid: &[f64],
    rate: f64,
) -> Result<MinimaxBound> {
    let (log_ratio, t, source) = sparse_sign_log_ratio(d, s)?;
    let set = SparseSignSet::new(d, s)?;
    if !(log_ratio > 0.0) {
        let mut out = MinimaxBound::new(pipeline, 0.0, false);
        out.log_ratio = Some(log_ratio);
        out.t = Some(t as f64);
        return Ok(out);
    }
    let values: Vec<f64> = eps_grid
        .par_iter()
        .map(|&e| sparse_sign_bound_at(e, t, log_ratio, mi_per_eps_sq))
        .collect();
    // Largest value; ties go to the smallest eps.
    let mut best = 0usize;
    for i in 1..values.len() {
        if values[i] > values[best] || (values[i] == values[best] && eps_grid[i] < eps_grid[best]) {
            best = i;
        }
    }
    let eps = eps_grid[best];
    let mut out = MinimaxBound::new(pipeline, values[best], true);
    out.t = Some(t as f64);
    out.eps = Some(eps);
    out.mi_bound = Some(mi_per_eps_sq * eps * eps);
    out.log_ratio = Some(log_ratio);
    out.separation = Some((t.max(1) as f64).sqrt() * eps);
    out.implied_constant = Some(values[best] / rate);
    if let Some(sq) = set.min_sq_distance_beyond(t) {
        out.aux.insert("separation_exact".into(), (sq as f64).sqrt() * eps);
    }
    out.aux.insert("ln_card".into(), set.ln_cardinality());
    out.aux.insert(
        "log_ratio_exact".into(),
        if source == LogRatioSource::Exact { 1.0 } else { 0.0 },
    );
    out.aux.insert("grid_points".into(), eps_grid.len() as f64);
    Ok(out)
}

/// Non-asymptotic lower bound for the `s`-sparse Gaussian location family
/// `N(theta, sigma2 I_d)` from `n` samples, maximized over `eps_grid`.
///
/// Uses `V` uniform on the sparse sign set, `theta_v = eps v`, radius
/// `t = floor(s/4)` and the pairwise-KL information bound `n s eps^2 / sigma2`.
/// The loss factor uses `delta(t) >= max(sqrt t, 1) eps`; the exact
/// separation is reported as `aux["separation_exact"]`.
pub fn sparse_location_bound(d: u64, s: u64, sigma2: f64, n: u64, eps_grid: &[f64]) -> Result<MinimaxBound> {
    check_sparse_args(d, s, sigma2, eps_grid)?;
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let mi_per_eps_sq = n as f64 * sparse_sign_mean_pairwise_half_sq(s) / sigma2;
    let rate = sigma2 * s as f64 * (d as f64 / s as f64).ln() / n as f64;
    let mut out = sparse_sign_pipeline(Pipeline::SparseLocation, d, s, mi_per_eps_sq, eps_grid, rate)?;
    out.aux.insert("n".into(), n as f64);
    Ok(out)
}

/// `|X|_F^2`.
pub fn frobenius_sq(x: &DMatrix<f64>) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Lower bound for `s`-sparse `theta` observed as `Y = X theta + noise`,
/// with the information bound `s eps^2 |X|_F^2 / (d sigma2)` from
/// `Cov(V) = (s/d) I`.
pub fn compressed_sensing_bound(x: &DMatrix<f64>, s: u64, sigma2: f64, eps_grid: &[f64]) -> Result<MinimaxBound> {
    let d = x.ncols() as u64;
    check_sparse_args(d, s, sigma2, eps_grid)?;
    let frob_sq = frobenius_sq(x);
    if !(frob_sq > 0.0) {
        return Err(domain("design matrix is zero"));
    }
    let mi_per_eps_sq = s as f64 * frob_sq / (d as f64 * sigma2);
    let rate = sigma2 * s as f64 * d as f64 * (d as f64 / s as f64).ln() / frob_sq;
    let mut out = sparse_sign_pipeline(Pipeline::CompressedSensing, d, s, mi_per_eps_sq, eps_grid, rate)?;
    out.aux.insert("frobenius_sq".into(), frob_sq);
    out.aux.insert("n".into(), x.nrows() as f64);
    Ok(out)
}

/// `int_0^inf max(0, (d-1)/d - n ln(1+u) / (2 d ln 2)) du`
/// `= n / (2 d ln 2) * (exp(x) - 1 - x)` with `x = 2 (d-1) ln 2 / n`.
pub fn log_hinge_integral(d: u64, n: u64) -> Result<f64> {
    if d < 2 || n < 1 {
        return Err(domain(format!("need d >= 2 and n >= 1, got d = {d}, n = {n}")));
    }
    let (df, nf) = (d as f64, n as f64);
    let x = 2.0 * (df - 1.0) * LN_2 / nf;
    Ok(nf / (2.0 * df * LN_2) * (x.exp_m1() - x))
}

/// `(d-1)^2 ln 2 / (d n)`, a lower bound on [`log_hinge_integral`].
pub fn log_hinge_integral_lower(d: u64, n: u64) -> f64 {
    let (df, nf) = (d as f64, n as f64);
    (df - 1.0) * (df - 1.0) * LN_2 / (df * nf)
}

/// `int_0^inf max(0, c1 - c2 u) du = c1^2 / (2 c2)` for `c1 > 0`, else 0.
pub fn hinge_integral(c1: f64, c2: f64) -> Result<f64> {
    if !(c2 > 0.0) {
        return Err(domain(format!("hinge slope must be positive, got {c2}")));
    }
    Ok(if c1 > 0.0 { c1 * c1 / (2.0 * c2) } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalMeanMode {
    /// Tail statement at `t^2 = d sigma2 ln 2 / (4n)` with probability 1/4.
    Simple,
    /// Integrated tail bound.
    Integrated,
}

impl std::str::FromStr for NormalMeanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Self::Simple),
            "integrated" => Ok(Self::Integrated),
            other => Err(Error::Unknown {
                kind: "normal-mean mode",
                name: other.into(),
            }),
        }
    }
}

/// Lower bound on `E|theta_hat - theta|^2` for `N(theta, sigma2 I_d)` from
/// `n` samples, with `V` uniform on the ball of radius `2t`.
///
/// `Simple` returns the risk floor `t^2 / 4` implied by
/// `P(|theta_hat - theta|^2 >= t^2) >= 1/4` at `t^2 = d sigma2 ln 2 / (8n)`.
/// `Integrated` returns
/// `(d-1)^2 ln 2 / (4 d^2) * sigma2 d / n`; the sharper value
/// `sigma2 / 4 * log_hinge_integral(d, n)` is kept in `aux["integral_form"]`.
pub fn normal_mean_bound(d: u64, sigma2: f64, n: u64, mode: NormalMeanMode) -> Result<MinimaxBound> {
    if d < 2 {
        return Err(domain(format!("normal mean bound needs d >= 2, got {d}")));
    }
    if n == 0 || !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain("need n >= 1 and sigma2 > 0"));
    }
    let (df, nf) = (d as f64, n as f64);
    match mode {
        NormalMeanMode::Simple => {
            // With I <= 2 n t^2 / sigma2 the tail is at least
            // (d-1)/d - 2 n t^2 / (d sigma2 ln 2), which is >= 1/4 at this t^2.
            let t_sq = df * sigma2 * LN_2 / (8.0 * nf);
            let mi = 2.0 * nf * t_sq / sigma2;
            let tail = (df - 1.0) / df - mi / (df * LN_2);
            let mut out = MinimaxBound::new(Pipeline::NormalMeanSimple, 0.25 * t_sq, true);
            out.t = Some(t_sq.sqrt());
            out.mi_bound = Some(mi);
            out.log_ratio = Some(df * LN_2);
            out.implied_constant = Some(out.value / (sigma2 * df / nf));
            out.aux.insert("tail_probability".into(), 0.25);
            out.aux.insert("tail_bound_at_t".into(), tail);
            out.aux.insert("t_sq".into(), t_sq);
            // The radius t^2 = d sigma2 ln 2 / (4n) gives (d-1)/d - 1/2 instead.
            let wide = 2.0 * t_sq;
            out.aux.insert("t_sq_wide".into(), wide);
            out.aux.insert("tail_bound_at_wide".into(), (df - 1.0) / df - 2.0 * nf * wide / (sigma2 * df * LN_2));
            Ok(out)
        }
        NormalMeanMode::Integrated => {
            let value = (df - 1.0) * (df - 1.0) * LN_2 / (4.0 * df * df) * sigma2 * df / nf;
            let mut out = MinimaxBound::new(Pipeline::NormalMeanIntegrated, value, true);
            out.log_ratio = Some(df * LN_2);
            out.implied_constant = Some(value / (sigma2 * df / nf));
            out.aux.insert("integral_form".into(), sigma2 / 4.0 * log_hinge_integral(d, n)?);
            Ok(out)
        }
    }
}

/// Tail bound `P(|theta_hat - V| >= t) >= 1 - (I + ln 2) / (d ln(r/t))` for
/// `V` uniform on the radius-`r` ball and `n` samples from `N(V, sigma2 I_d)`.
///
/// `I` is bounded by the Gaussian maximum-entropy argument with the exact
/// prior covariance `r^2 / (d+2) I`: `I <= (n d / 2) ln(1 + r^2 / ((d+2) sigma2))`.
pub fn normal_mean_tail_bound(d: u64, sigma2: f64, n: u64, r: f64, t: f64) -> Result<BoundResult> {
    if d < 1 || n == 0 || !(sigma2 > 0.0) {
        return Err(domain("need d >= 1, n >= 1 and sigma2 > 0"));
    }
    if !(t > 0.0) || t > r {
        return Err(domain(format!("need 0 < t <= r, got t = {t}, r = {r}")));
    }
    let (df, nf) = (d as f64, n as f64);
    let mi = 0.5 * nf * df * (r * r / ((df + 2.0) * sigma2)).ln_1p();
    let mut out = continuum_fano_bound(df * (r / t).ln(), mi)?;
    out.t = Some(t);
    out.aux.insert("r".into(), r);
    Ok(out)
}

/// Lower bound for fixed-design regression `Y = X theta + noise`.
///
/// The integrated hinge gives the exact form
/// `((d-1)^2 / d^2) * d (d+2) sigma2 ln 2 / (8 |X|_F^2)`; for `d >= 9` the
/// returned value is the simplified `d sigma2 / (12 n gamma_max^2(X / sqrt n))`,
/// which the exact form dominates. Below `d = 9` the exact form is returned
/// and `aux["simplified_applies"]` is 0.
pub fn linear_regression_bound(x: &DMatrix<f64>, sigma2: f64) -> Result<MinimaxBound> {
    let (n, d) = (x.nrows(), x.ncols());
    if d < 2 {
        return Err(domain(format!("regression bound needs d >= 2, got {d}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain("sigma2 must be positive"));
    }
    if n < d {
        return Err(Error::RankDeficient(0.0));
    }
    let sv = x.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > smax * 1e-12 * n.max(d) as f64) {
        return Err(Error::RankDeficient(smin));
    }
    let (df, nf) = (d as f64, n as f64);
    let frob_sq = frobenius_sq(x);
    // P(|theta_hat - theta|^2 >= u) >= c1 - c2 u with r = 2 sqrt(u).
    let c1 = (df - 1.0) / df;
    let c2 = 4.0 * frob_sq / (sigma2 * df * (df + 2.0) * LN_2);
    let exact = hinge_integral(c1, c2)?;
    let gamma_sq = smax * smax / nf;
    let intermediate = LN_2 / 8.0 * (df - 1.0) * (df - 1.0) * (df + 2.0) / (df * df * df) / gamma_sq * df * sigma2 / nf;
    let simplified = 1.0 / 12.0 / gamma_sq * (df * sigma2 / nf);
    let simplified_applies = d >= 9;
    let value = if simplified_applies { simplified } else { exact };
    let mut out = MinimaxBound::new(Pipeline::LinearRegression, value, true);
    out.log_ratio = Some(df * LN_2);
    out.implied_constant = Some(value / (df * sigma2 / (nf * gamma_sq)));
    out.aux.insert("exact_form".into(), exact);
    out.aux.insert("intermediate_form".into(), intermediate);
    out.aux.insert("simplified_form".into(), simplified);
    out.aux.insert("exact_over_simplified".into(), exact / simplified);
    out.aux.insert("simplified_applies".into(), if simplified_applies { 1.0 } else { 0.0 });
    out.aux.insert("gamma_max_sq".into(), gamma_sq);
    out.aux.insert("frobenius_sq".into(), frob_sq);
    // I(V; Y) <= |X|_F^2 r^2 / ((d+2) sigma2) for V uniform on the radius-r ball.
    out.aux.insert("mi_per_r_sq".into(), frob_sq / ((df + 2.0) * sigma2));
    out.aux.insert("hinge_c1".into(), c1);
    out.aux.insert("hinge_c2".into(), c2);
    Ok(out)
}
