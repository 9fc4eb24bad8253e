//! Bound evaluation and matched risk for one configuration.

use nalgebra::DMatrix;
use serde_json::Value;

use fanobound::lab::{gaussian_design, simulate_risk, EstimatorKind, ExperimentConfig, Prior, Problem};
use fanobound::minimax::{
    compressed_sensing_bound, compressed_sensing_grid_center, default_eps_grid, frobenius_sq, linear_regression_bound,
    normal_mean_bound, normal_mean_tail_bound, sparse_location_bound, sparse_location_grid_center,
};
use fanobound::Error;

use crate::config::{BoundConfig, BoundProblem};
use crate::output::{RiskCells, Row};
use crate::CliError;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::TooLarge { .. } | Error::EstimationFailure(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub struct Evaluation {
    pub result: Value,
    pub row: Row,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("bound results serialize")
}

pub fn evaluate(cfg: &BoundConfig) -> Result<Evaluation, CliError> {
    let (d, n, sigma2) = (cfg.d, cfg.n, cfg.sigma2);
    let s = cfg.s.unwrap_or(0);
    let mut row = Row {
        pipeline: String::new(),
        d,
        s: cfg.s,
        n,
        sigma2,
        t: None,
        eps: None,
        mi_bound: None,
        log_ratio: None,
        bound: 0.0,
        valid: false,
        risk: None,
        extra: None,
    };
    let minimax = match cfg.problem {
        BoundProblem::NormalMean => normal_mean_bound(d, sigma2, n, cfg.mode)?,
        BoundProblem::SparseLocation => {
            let grid = cfg
                .eps_grid
                .clone()
                .unwrap_or_else(|| default_eps_grid(sparse_location_grid_center(d, s, sigma2, n)));
            sparse_location_bound(d, s, sigma2, n, &grid)?
        }
        BoundProblem::CompressedSensing => {
            let x = gaussian_design(cfg.seed, n as usize, d as usize);
            let grid = cfg
                .eps_grid
                .clone()
                .unwrap_or_else(|| default_eps_grid(compressed_sensing_grid_center(d, s, sigma2, frobenius_sq(&x))));
            compressed_sensing_bound(&x, s, sigma2, &grid)?
        }
        BoundProblem::Regression => linear_regression_bound(&regression_design(cfg), sigma2)?,
        BoundProblem::NormalMeanTail => {
            let (r, t) = (cfg.r.unwrap_or(0.0), cfg.t.unwrap_or(0.0));
            let b = normal_mean_tail_bound(d, sigma2, n, r, t)?;
            row.pipeline = "normal-mean-tail".into();
            row.t = b.t;
            row.mi_bound = b.mi_bound;
            row.log_ratio = b.log_ratio;
            row.bound = b.value;
            row.valid = b.valid;
            return Ok(Evaluation {
                result: to_value(&b),
                row,
            });
        }
    };
    row.pipeline = minimax.pipeline.to_string();
    row.t = minimax.t;
    row.eps = minimax.eps;
    row.mi_bound = minimax.mi_bound;
    row.log_ratio = minimax.log_ratio;
    row.bound = minimax.value;
    row.valid = minimax.valid;
    Ok(Evaluation {
        result: to_value(&minimax),
        row,
    })
}

/// `scale * sqrt(n) * I_d`.
fn regression_design(cfg: &BoundConfig) -> DMatrix<f64> {
    let d = cfg.d as usize;
    DMatrix::<f64>::identity(d, d) * (cfg.scale * (cfg.n as f64).sqrt())
}

/// Simulated risk of the reference estimator for `cfg`.
pub fn matched_risk(cfg: &BoundConfig, eval: &Evaluation, reps: u64) -> Result<RiskCells, CliError> {
    let (problem, estimator, sigma2, prior) = match cfg.problem {
        BoundProblem::NormalMean => (Problem::NormalMean, EstimatorKind::SampleMean, cfg.sigma2, None),
        BoundProblem::SparseLocation => (
            Problem::SparseLocation,
            EstimatorKind::HardThreshold,
            cfg.sigma2,
            eval.row.eps.map(|eps| Prior::SparseSign { eps }),
        ),
        // OLS error with design c X and noise sigma2 matches design X with noise sigma2 / c^2.
        BoundProblem::Regression => (
            Problem::Regression,
            EstimatorKind::Ols,
            cfg.sigma2 / (cfg.scale * cfg.scale),
            None,
        ),
        other => {
            return Err(CliError::Config(format!(
                "risk-reps is not available for problem `{other}`"
            )))
        }
    };
    let mut exp = ExperimentConfig::new(problem, estimator);
    exp.d = cfg.d;
    exp.s = cfg.s.unwrap_or(1);
    exp.n = cfg.n;
    exp.sigma2 = sigma2;
    exp.prior = prior;
    exp.reps = reps;
    exp.seed = cfg.seed;
    let e = simulate_risk(&exp)?.empirical_risk;
    Ok(RiskCells {
        estimator: estimator.to_string(),
        mean: e.mean,
        lower: e.lower,
        upper: e.upper,
    })
}
