//! Named verification suites with deterministic plain-text reports.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::continuum::{
    ball_volume_ratio_analytic, grid_partition_counts, mc_volume_ratio, ContinuumSpace, GridOptions, Norm,
    VolumeRatioOptions,
};
use crate::discrete::{
    classical_fano_lhs, fano_conditional_form, fano_inequality_sides, fano_tail_lower_bound, neighborhood_sizes,
    DiscreteSpace,
};
use crate::error::{Error, Result};
use crate::info::{conditional_entropy_given_observation, mutual_information_exact, MarkovChainSpec, ProbVector};
use crate::lab::{
    check_bounds, enumerate_decoders_min_tail, random_chain, random_symmetric_space, simulate_risk, EstimatorKind,
    ExperimentConfig, Prior, Problem,
};
use crate::minimax::{hinge_integral, log_hinge_integral, log_hinge_integral_lower};
use crate::quadrature::{bisect, integrate};
use crate::rng::{derive_seed, domain as streams, substream};

/// Tolerance on the inequality slack for exact chains.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Prop1Exhaustive,
    DecoderOracle,
    Quadrature,
    Volume,
    GridPartition,
    EstimatorRisk,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Prop1Exhaustive,
        Suite::DecoderOracle,
        Suite::Quadrature,
        Suite::Volume,
        Suite::GridPartition,
        Suite::EstimatorRisk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Prop1Exhaustive => "prop1-exhaustive",
            Suite::DecoderOracle => "decoder-oracle",
            Suite::Quadrature => "quadrature",
            Suite::Volume => "volume",
            Suite::GridPartition => "grid-partition",
            Suite::EstimatorRisk => "estimator-risk",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "suite",
                name: s.into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Perturbs every checked quantity so the suite must fail.
    pub inject_fault: bool,
    pub chains: usize,
    pub decoder_instances: usize,
    pub volume_seeds: usize,
    pub volume_points: usize,
    pub risk_reps: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            inject_fault: false,
            chains: 1000,
            decoder_instances: 200,
            volume_seeds: 20,
            volume_points: 1_000_000,
            risk_reps: 10_000,
        }
    }
}

/// One group of checks: how many passed and the smallest margin seen.
/// A margin is the signed distance to failure; negative means failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: u64,
    pub total: u64,
    pub worst_margin: f64,
    /// Failures allowed before the group fails.
    pub allowed_failures: u64,
}

impl Check {
    fn new(name: impl Into<String>, allowed_failures: u64) -> Self {
        Self {
            name: name.into(),
            passed: 0,
            total: 0,
            worst_margin: f64::INFINITY,
            allowed_failures,
        }
    }

    fn record(&mut self, margin: f64) {
        self.total += 1;
        if margin >= 0.0 {
            self.passed += 1;
        }
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
        }
    }

    pub fn pass(&self) -> bool {
        self.total > 0 && self.total - self.passed <= self.allowed_failures
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub inject_fault: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.worst_margin).fold(f64::INFINITY, f64::min)
    }

    /// Plain-text summary; identical inputs give identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "suite {} seed {}{}",
            self.suite.as_str(),
            self.seed,
            if self.inject_fault { " fault-injected" } else { "" }
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {} {}: {}/{} worst-margin {:.6e}",
                if c.pass() { "PASS" } else { "FAIL" },
                c.name,
                c.passed,
                c.total,
                c.worst_margin
            );
        }
        let _ = writeln!(
            out,
            "{} worst-margin {:.6e}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.worst_margin()
        );
        out
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    let fault = if opts.inject_fault { 1.0 } else { 0.0 };
    let checks = match suite {
        Suite::Prop1Exhaustive => prop1_exhaustive(opts, fault)?,
        Suite::DecoderOracle => decoder_oracle(opts, fault)?,
        Suite::Quadrature => quadrature_suite(opts, fault)?,
        Suite::Volume => volume_suite(opts, fault)?,
        Suite::GridPartition => grid_suite(opts, fault)?,
        Suite::EstimatorRisk => estimator_risk(opts, fault)?,
    };
    Ok(SuiteReport {
        suite,
        seed: opts.seed,
        inject_fault: opts.inject_fault,
        checks,
    })
}

/// Radii worth testing on a table space: 0 and every off-diagonal distance,
/// so each neighborhood boundary is hit exactly.
pub fn boundary_radii(space: &DiscreteSpace) -> Vec<f64> {
    let n = space.len();
    let mut ts = vec![0.0];
    for i in 0..n {
        for j in (i + 1)..n {
            ts.push(space.rho(i, j));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Chain sizes for instance `i`: `|V| = |V̂|` in 2..=5, `|X|` in 2..=5.
pub fn chain_sizes(seed: u64, i: u64) -> (usize, usize, usize) {
    let mut rng = substream(seed, streams::SUITE, i);
    let k = rng.random_range(2..=5);
    let x = rng.random_range(2..=5);
    (k, x, k)
}

fn prop1_exhaustive(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut general = Check::new("random chains, random symmetric metric", 0);
    for i in 0..opts.chains as u64 {
        let s = derive_seed(opts.seed, i);
        let sizes = chain_sizes(opts.seed, i);
        let chain = random_chain(s, sizes)?;
        let space = random_symmetric_space(s, sizes.0)?;
        let worst = boundary_radii(&space)
            .into_iter()
            .map(|t| fano_inequality_sides(&chain, &space, t).map(|sd| sd.slack()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        general.record(worst - fault + SLACK_TOLERANCE);
    }

    let mut classical = Check::new("0-1 metric at t = 0 equals the classical form", 0);
    for i in 0..100u64 {
        let s = derive_seed(opts.seed ^ 0xc1a5, i);
        let k = 2 + (i % 4) as usize;
        let chain = random_chain(s, (k, 3, k))?;
        let space = DiscreteSpace::zero_one(k)?;
        let sides = fano_inequality_sides(&chain, &space, 0.0)?;
        let diff = (sides.lhs - classical_fano_lhs(&chain)?).abs();
        classical.record(1e-12 - diff - fault);
    }
    Ok(vec![general, classical])
}

/// Decoder-oracle instance `i`: uniform prior, Dirichlet channel, random
/// symmetric metric, and a radius chosen among the boundary radii.
pub fn decoder_instance(seed: u64, i: u64) -> Result<(MarkovChainSpec, DiscreteSpace, f64)> {
    let mut rng = substream(seed, streams::SUITE, 1 << 32 | i);
    let k = rng.random_range(2..=4usize);
    let x = rng.random_range(1..=4usize);
    let s = derive_seed(seed ^ 0xdec0, i);
    let chain = random_chain(s, (k, x, k))?;
    let space = random_symmetric_space(s, k)?;
    let radii = boundary_radii(&space);
    let t = radii[rng.random_range(0..radii.len())];
    Ok((chain, space, t))
}

fn decoder_oracle(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut mi_form = Check::new("min decoder tail >= mutual-information form (uniform prior)", 0);
    let mut cond_form = Check::new("min decoder tail >= conditional-entropy form (any prior)", 0);
    for i in 0..opts.decoder_instances as u64 {
        let (chain, space, t) = decoder_instance(opts.seed, i)?;
        let k = space.len();
        let profile = neighborhood_sizes(&space, t)?;

        let uniform = ProbVector::uniform(k)?;
        let min_tail = enumerate_decoders_min_tail(&uniform, &chain.channel, &space, t)?;
        let mi = mutual_information_exact(&uniform, &chain.channel)?;
        let b = fano_tail_lower_bound(k as u64, &profile, mi)?;
        mi_form.record(min_tail - b.value - fault + 1e-12);

        let min_tail = enumerate_decoders_min_tail(&chain.prior, &chain.channel, &space, t)?;
        let hvx = conditional_entropy_given_observation(&chain.prior, &chain.channel)?;
        let b = fano_conditional_form(hvx, k as u64, &profile)?;
        cond_form.record(min_tail - b.value - fault + 1e-12);
    }
    Ok(vec![mi_form, cond_form])
}

/// `(d, n)` pairs for the integral check: the four corners plus seeded
/// draws from `[2, 64] x [1, 1000]`.
pub fn quadrature_pairs(seed: u64, count: usize) -> Vec<(u64, u64)> {
    let mut pairs = vec![(2, 1), (2, 1000), (64, 1), (64, 1000)];
    let mut rng = substream(seed, streams::SUITE, 2 << 32);
    while pairs.len() < count {
        pairs.push((rng.random_range(2..=64), rng.random_range(1..=1000)));
    }
    pairs.truncate(count);
    pairs
}

/// The log-hinge integral by quadrature after substituting `u = ln(1 + x)`,
/// with the upper limit found by bisection on the integrand.
pub fn log_hinge_integral_quadrature(d: u64, n: u64) -> f64 {
    let (df, nf) = (d as f64, n as f64);
    let hinge = move |u: f64| (df - 1.0) / df - nf * u / (2.0 * df * LN_2);
    let mut hi = 1.0;
    while hinge(hi) > 0.0 {
        hi *= 2.0;
    }
    let root = bisect(hinge, 0.0, hi);
    integrate(|u| hinge(u).max(0.0) * u.exp(), 0.0, root, 0.0, 1e-13)
}

fn quadrature_suite(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut closed = Check::new("closed form vs quadrature, relative 1e-8", 0);
    let mut lower = Check::new("closed form >= (d-1)^2 ln 2 / (d n)", 0);
    for (d, n) in quadrature_pairs(opts.seed, 20) {
        let exact = log_hinge_integral(d, n)? * (1.0 + fault);
        let quad = log_hinge_integral_quadrature(d, n);
        closed.record(1e-8 - ((exact - quad) / quad).abs());
        lower.record(exact - log_hinge_integral_lower(d, n) * (1.0 + 2.0 * fault));
    }
    let mut hinge = Check::new("hinge identity vs quadrature, 1e-10", 0);
    let mut rng = substream(opts.seed, streams::SUITE, 3 << 32);
    for _ in 0..20 {
        let c1: f64 = rng.random_range(0.01..2.0);
        let c2: f64 = rng.random_range(0.01..5.0);
        let exact = hinge_integral(c1, c2)? + fault;
        let quad = integrate(|x| (c1 - c2 * x).max(0.0), 0.0, c1 / c2, 1e-14, 1e-14);
        hinge.record(1e-10 - (exact - quad).abs());
    }
    Ok(vec![closed, lower, hinge])
}

/// Ball-in-ball volume ratio check for one dimension and seed: returns the
/// relative error and the coverage margin, the relative distance from
/// `(r/t)^d` to the nearer interval endpoint (negative when outside).
pub fn volume_trial(d: usize, seed: u64, points: usize) -> Result<(f64, f64)> {
    let (r, t) = (2.0, 1.0);
    let space = ContinuumSpace::l2_ball(d, r, Norm::L2)?;
    let opts = VolumeRatioOptions {
        centers: 0,
        points,
        seed,
        declared_centers: vec![vec![0.0; d]],
        ..VolumeRatioOptions::default()
    };
    let est = mc_volume_ratio(&space, t, &opts)?;
    let analytic = ball_volume_ratio_analytic(r, t, d as u32)?;
    let coverage = (analytic - est.ratio_lower).min(est.ratio_upper - analytic) / analytic;
    Ok(((est.ratio - analytic).abs() / analytic, coverage))
}

fn volume_suite(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for d in [2usize, 3, 5] {
        // At most 3% of seeds may miss.
        let allowed = (opts.volume_seeds as u64 * 3).div_ceil(100);
        let mut c = Check::new(format!("d = {d}: within 3% and 99% CI covers (r/t)^d"), allowed);
        for i in 0..opts.volume_seeds as u64 {
            let (rel, coverage) = volume_trial(d, derive_seed(opts.seed, i), opts.volume_points)?;
            c.record((0.03 - rel).min(coverage) - fault);
        }
        checks.push(c);
    }
    Ok(checks)
}

/// `eps^2 |W|` for the unit disk and `ln(|W| / N_t)` for the radius-1 disk
/// with `t = 1/2`, both at `level`.
pub fn grid_trial(level: u32, seed: u64) -> Result<(f64, f64)> {
    let disk = ContinuumSpace::l2_ball(2, 1.0, Norm::L2)?;
    let opts = GridOptions {
        centers: 0,
        declared_centers: vec![vec![0.0, 0.0]],
        seed,
        ..GridOptions::default()
    };
    let area = grid_partition_counts(&disk, 0.5, level, &opts)?;
    Ok((area.covered_volume(2), area.log_ratio()))
}

fn grid_suite(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut area = Check::new("level 9: eps^2 |W| within 2% of pi", 0);
    let mut ratio = Check::new("level 9: ln(|W| / N_t) within 5% of d ln(r/t)", 0);
    let (covered, log_ratio) = grid_trial(9, opts.seed)?;
    area.record(0.02 - ((covered - PI) / PI).abs() - fault);
    let analytic = 2.0 * 2f64.ln();
    ratio.record(0.05 - ((log_ratio - analytic) / analytic).abs() - fault);

    let mut monotone = Check::new("levels 5..9: area error shrinks", 0);
    let mut prev = f64::INFINITY;
    for level in 5..=9 {
        let (covered, _) = grid_trial(level, opts.seed)?;
        let err = ((covered - PI) / PI).abs() + fault * (level as f64);
        monotone.record(prev - err);
        prev = err;
    }
    Ok(vec![area, ratio, monotone])
}

/// Simulation presets shipped with the harness.
pub fn risk_presets(seed: u64, reps: u64) -> Vec<ExperimentConfig> {
    let base = |problem, estimator, d, s, n| {
        let mut c = ExperimentConfig::new(problem, estimator);
        c.d = d;
        c.s = s;
        c.n = n;
        c.reps = reps;
        c.seed = seed;
        c
    };
    let mut tail = base(Problem::NormalMean, EstimatorKind::SampleMean, 2, 1, 1);
    tail.prior = Some(Prior::Ball { radius: 0.2 });
    tail.t_list = vec![0.1];
    vec![
        base(Problem::NormalMean, EstimatorKind::SampleMean, 10, 1, 100),
        base(Problem::NormalMean, EstimatorKind::HardThreshold, 10, 1, 100),
        tail,
        base(Problem::Regression, EstimatorKind::Ols, 9, 1, 9),
        base(Problem::SparseLocation, EstimatorKind::HardThreshold, 32, 4, 200),
        base(Problem::SparseLocation, EstimatorKind::SoftThreshold, 32, 4, 200),
        base(Problem::SparseLocation, EstimatorKind::SampleMean, 32, 4, 200),
        base(Problem::DiscreteChain, EstimatorKind::Map, 6, 3, 1),
    ]
}

fn estimator_risk(opts: &SuiteOptions, fault: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for cfg in risk_presets(opts.seed, opts.risk_reps) {
        let mut report = simulate_risk(&cfg)?;
        for b in report.bound_values.iter_mut() {
            b.value += fault;
        }
        let name = format!("{} / {}: bounds below 99% upper risk", cfg.problem, cfg.estimator);
        let mut c = Check::new(name, 0);
        for (_, m) in check_bounds(&report).margins {
            c.record(m);
        }
        checks.push(c);

        // Constant-risk estimators have a known risk sigma2 d / n.
        let analytic = match (cfg.problem, cfg.estimator, &report.prior) {
            (Problem::NormalMean, EstimatorKind::SampleMean, _) | (Problem::Regression, EstimatorKind::Ols, _) => {
                Some(cfg.sigma2 * cfg.d as f64 / cfg.n as f64)
            }
            _ => None,
        };
        if let Some(a) = analytic {
            let mut c = Check::new(format!("{} / {}: 99% CI covers sigma2 d / n", cfg.problem, cfg.estimator), 0);
            let e = report.empirical_risk;
            c.record((a - e.lower).min(e.upper - a) - fault);
            checks.push(c);
        }
    }
    Ok(checks)
}
