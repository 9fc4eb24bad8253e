//! Python bindings: discrete spaces and chains as classes, bounds and
//! simulations as functions returning plain dicts.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

use fanobound::continuum::{self, ContinuumSpace, Norm, VolumeRatioOptions};
use fanobound::discrete::{self, NeighborhoodProfile};
use fanobound::info::{self, MarkovChainSpec, ProbVector, StochasticMatrix};
use fanobound::lab::{self, ExperimentConfig};
use fanobound::minimax::{self, NormalMeanMode};
use fanobound::verify::{self, Suite, SuiteOptions};

fn err(e: fanobound::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(value_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, value_to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

/// Serialize to a dict. Non-finite floats become `None`.
fn to_dict<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &value)
}

fn design(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("design must be a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// A finite index set with a symmetric distance.
#[pyclass(name = "DiscreteSpace", module = "pyfanobound", frozen)]
struct PyDiscreteSpace {
    inner: discrete::DiscreteSpace,
}

#[pymethods]
impl PyDiscreteSpace {
    /// `k` points under the 0-1 distance.
    #[staticmethod]
    fn zero_one(k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: discrete::DiscreteSpace::zero_one(k).map_err(err)?,
        })
    }

    /// `{0,1}^d` under Hamming distance.
    #[staticmethod]
    fn hypercube(d: usize) -> PyResult<Self> {
        Ok(Self {
            inner: discrete::DiscreteSpace::hypercube(d).map_err(err)?,
        })
    }

    /// `s`-sparse sign vectors in dimension `d` under Hamming distance.
    #[staticmethod]
    fn sparse_sign(d: u64, s: u64) -> PyResult<Self> {
        Ok(Self {
            inner: discrete::sparse_sign_space(d, s).map_err(err)?,
        })
    }

    /// Distances given as an `n x n` nested list.
    #[staticmethod]
    fn from_table(table: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = table.len();
        if table.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("distance table must be square"));
        }
        Ok(Self {
            inner: discrete::DiscreteSpace::from_table(n, table.concat()).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn points(&self) -> Vec<Vec<i32>> {
        self.inner.points().to_vec()
    }

    fn rho(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.len();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index out of range for {n} points")));
        }
        Ok(self.inner.rho(i, j))
    }

    /// `{"t", "n_max", "n_min"}` for closed `t`-neighborhoods.
    fn neighborhood_profile<'py>(&self, py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &discrete::neighborhood_sizes(&self.inner, t).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("DiscreteSpace(points={})", self.inner.len())
    }
}

/// The chain `V -> X -> V̂` given by a prior, a channel and a decoder.
#[pyclass(name = "MarkovChain", module = "pyfanobound", frozen)]
struct PyMarkovChain {
    inner: MarkovChainSpec,
}

#[pymethods]
impl PyMarkovChain {
    #[new]
    fn new(prior: Vec<f64>, channel: Vec<Vec<f64>>, decoder: Vec<Vec<f64>>) -> PyResult<Self> {
        let prior = ProbVector::new(prior).map_err(err)?;
        let channel = StochasticMatrix::from_rows(channel).map_err(err)?;
        let decoder = StochasticMatrix::from_rows(decoder).map_err(err)?;
        Ok(Self {
            inner: MarkovChainSpec::new(prior, channel, decoder).map_err(err)?,
        })
    }

    /// `I(V; X)` in nats.
    fn mutual_information(&self) -> PyResult<f64> {
        info::mutual_information_exact(&self.inner.prior, &self.inner.channel).map_err(err)
    }

    /// `H(V | V̂)` in nats.
    fn conditional_entropy(&self) -> PyResult<f64> {
        info::conditional_entropy(&self.inner).map_err(err)
    }

    /// Both sides of the distance-based Fano inequality at radius `t`.
    fn fano_sides<'py>(&self, py: Python<'py>, space: &PyDiscreteSpace, t: f64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &discrete::fano_inequality_sides(&self.inner, &space.inner, t).map_err(err)?)
    }

    /// `h2(P_e) + P_e ln(|V| - 1)` for the 0-1 error of this chain.
    fn classical_fano_lhs(&self) -> PyResult<f64> {
        discrete::classical_fano_lhs(&self.inner).map_err(err)
    }
}

#[pyfunction]
fn entropy(p: Vec<f64>) -> PyResult<f64> {
    Ok(info::entropy(&ProbVector::new(p).map_err(err)?))
}

#[pyfunction]
fn binary_entropy(p: f64) -> PyResult<f64> {
    info::binary_entropy(p).map_err(err)
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::kl_divergence(&p, &q).map_err(err)
}

/// `I(V; X)` for a prior and a row-stochastic channel.
#[pyfunction]
fn mutual_information(prior: Vec<f64>, channel: Vec<Vec<f64>>) -> PyResult<f64> {
    let prior = ProbVector::new(prior).map_err(err)?;
    let channel = StochasticMatrix::from_rows(channel).map_err(err)?;
    info::mutual_information_exact(&prior, &channel).map_err(err)
}

#[pyfunction]
fn kl_gaussian(mu1: Vec<f64>, mu2: Vec<f64>, sigma2: f64) -> PyResult<f64> {
    info::kl_gaussian_shared_cov(&mu1, &mu2, sigma2).map_err(err)
}

/// Average pairwise KL over `n` samples from `N(mean_v, sigma2 I)`.
#[pyfunction]
fn mi_pairwise_kl_bound(means: Vec<Vec<f64>>, sigma2: f64, n: u64) -> PyResult<f64> {
    info::mi_pairwise_kl_bound(&means, sigma2, n).map_err(err)
}

/// `P(rho(V̂, V) > t) >= 1 - (I + ln 2) / ln(card / n_max)` when `card - n_min > n_max`.
#[pyfunction]
#[pyo3(signature = (card, n_max, n_min, mi, t = 0.0))]
fn fano_tail_lower_bound<'py>(
    py: Python<'py>,
    card: u64,
    n_max: u64,
    n_min: u64,
    mi: f64,
    t: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let profile = NeighborhoodProfile { t, n_max, n_min };
    to_dict(py, &discrete::fano_tail_lower_bound(card, &profile, mi).map_err(err)?)
}

/// Tail bound from `H(V | X)` directly.
#[pyfunction]
#[pyo3(signature = (h_v_given_x, card, n_max, n_min, t = 0.0))]
fn fano_conditional_form<'py>(
    py: Python<'py>,
    h_v_given_x: f64,
    card: u64,
    n_max: u64,
    n_min: u64,
    t: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let profile = NeighborhoodProfile { t, n_max, n_min };
    to_dict(py, &discrete::fano_conditional_form(h_v_given_x, card, &profile).map_err(err)?)
}

/// `1 - (I + ln 2) / log_ratio` for the continuum tail.
#[pyfunction]
fn continuum_fano_bound<'py>(py: Python<'py>, log_ratio: f64, mi: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &continuum::continuum_fano_bound(log_ratio, mi).map_err(err)?)
}

/// `(r / t)^d`.
#[pyfunction]
fn ball_volume_ratio(r: f64, t: f64, d: u32) -> PyResult<f64> {
    continuum::ball_volume_ratio_analytic(r, t, d).map_err(err)
}

/// Monte Carlo volume ratio for the radius-`r` Euclidean ball at radius `t`,
/// with the origin declared as the maximizing center.
#[pyfunction]
#[pyo3(signature = (d, r, t, points = 1_000_000, seed = 0, centers = 0))]
fn mc_ball_volume_ratio<'py>(
    py: Python<'py>,
    d: usize,
    r: f64,
    t: f64,
    points: usize,
    seed: u64,
    centers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let space = ContinuumSpace::l2_ball(d, r, Norm::L2).map_err(err)?;
    let opts = VolumeRatioOptions {
        centers,
        points,
        seed,
        declared_centers: vec![vec![0.0; d]],
        ..VolumeRatioOptions::default()
    };
    let est = py.detach(|| continuum::mc_volume_ratio(&space, t, &opts)).map_err(err)?;
    to_dict(py, &est)
}

/// Risk lower bound for the Gaussian mean; `mode` is "integrated" or "simple".
#[pyfunction]
#[pyo3(signature = (d, sigma2, n, mode = "integrated"))]
fn normal_mean_bound<'py>(py: Python<'py>, d: u64, sigma2: f64, n: u64, mode: &str) -> PyResult<Bound<'py, PyAny>> {
    let mode: NormalMeanMode = mode.parse().map_err(err)?;
    to_dict(py, &minimax::normal_mean_bound(d, sigma2, n, mode).map_err(err)?)
}

#[pyfunction]
fn normal_mean_tail_bound<'py>(
    py: Python<'py>,
    d: u64,
    sigma2: f64,
    n: u64,
    r: f64,
    t: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &minimax::normal_mean_tail_bound(d, sigma2, n, r, t).map_err(err)?)
}

/// Sparse Gaussian location bound maximized over `eps_grid` (a default
/// 64-point grid when omitted).
#[pyfunction]
#[pyo3(signature = (d, s, sigma2, n, eps_grid = None))]
fn sparse_location_bound<'py>(
    py: Python<'py>,
    d: u64,
    s: u64,
    sigma2: f64,
    n: u64,
    eps_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let grid =
        eps_grid.unwrap_or_else(|| minimax::default_eps_grid(minimax::sparse_location_grid_center(d, s, sigma2, n)));
    to_dict(py, &minimax::sparse_location_bound(d, s, sigma2, n, &grid).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (design_rows, s, sigma2, eps_grid = None))]
fn compressed_sensing_bound<'py>(
    py: Python<'py>,
    design_rows: Vec<Vec<f64>>,
    s: u64,
    sigma2: f64,
    eps_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let x = design(design_rows)?;
    let d = x.ncols() as u64;
    let grid = eps_grid.unwrap_or_else(|| {
        minimax::default_eps_grid(minimax::compressed_sensing_grid_center(d, s, sigma2, minimax::frobenius_sq(&x)))
    });
    to_dict(py, &minimax::compressed_sensing_bound(&x, s, sigma2, &grid).map_err(err)?)
}

#[pyfunction]
fn linear_regression_bound<'py>(py: Python<'py>, design_rows: Vec<Vec<f64>>, sigma2: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &minimax::linear_regression_bound(&design(design_rows)?, sigma2).map_err(err)?)
}

/// `∫_0^∞ max(0, (d-1)/d - n ln(1+x) / (2 d ln 2)) dx` in closed form.
#[pyfunction]
fn log_hinge_integral(d: u64, n: u64) -> PyResult<f64> {
    minimax::log_hinge_integral(d, n).map_err(err)
}

/// Seeded Monte Carlo risk of an estimator, with matched bounds.
#[pyfunction]
#[pyo3(signature = (problem, estimator, d = 10, s = 1, n = 100, sigma2 = 1.0, reps = 10_000, seed = 0, threshold = None, t_list = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_risk<'py>(
    py: Python<'py>,
    problem: &str,
    estimator: &str,
    d: u64,
    s: u64,
    n: u64,
    sigma2: f64,
    reps: u64,
    seed: u64,
    threshold: Option<f64>,
    t_list: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = ExperimentConfig::new(problem.parse().map_err(err)?, estimator.parse().map_err(err)?);
    cfg.d = d;
    cfg.s = s;
    cfg.n = n;
    cfg.sigma2 = sigma2;
    cfg.reps = reps;
    cfg.seed = seed;
    cfg.threshold = threshold;
    cfg.t_list = t_list.unwrap_or_default();
    let report = py.detach(|| lab::simulate_risk(&cfg)).map_err(err)?;
    let check = lab::check_bounds(&report);
    let out = to_dict(py, &report)?;
    out.set_item("bounds_hold", check.pass)?;
    Ok(out)
}

/// Run a verification suite; returns `{"pass", "report", "checks"}`.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0, inject_fault = false))]
fn run_suite<'py>(py: Python<'py>, suite: &str, seed: u64, inject_fault: bool) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let opts = SuiteOptions {
        seed,
        inject_fault,
        ..SuiteOptions::default()
    };
    let report = py.detach(|| verify::run_suite(suite, &opts)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pass", report.pass())?;
    out.set_item("report", report.render())?;
    out.set_item("checks", to_dict(py, &report.checks)?)?;
    Ok(out.into_any())
}

#[pymodule]
fn pyfanobound(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", fanobound::VERSION)?;
    m.add_class::<PyDiscreteSpace>()?;
    m.add_class::<PyMarkovChain>()?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(kl_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(mi_pairwise_kl_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fano_tail_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fano_conditional_form, m)?)?;
    m.add_function(wrap_pyfunction!(continuum_fano_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ball_volume_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(mc_ball_volume_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(normal_mean_bound, m)?)?;
    m.add_function(wrap_pyfunction!(normal_mean_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_location_bound, m)?)?;
    m.add_function(wrap_pyfunction!(compressed_sensing_bound, m)?)?;
    m.add_function(wrap_pyfunction!(linear_regression_bound, m)?)?;
    m.add_function(wrap_pyfunction!(log_hinge_integral, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_risk, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
