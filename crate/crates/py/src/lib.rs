//! Python bindings for `stepbayes`.
//!
//! Functions are passed around as the same text forms the CLI accepts
//! (`smooth`, `const:p`, `step:b:pL,pR`, `grid:v0,...` or a JSON path) or as
//! [`Function`] objects built from them. Library errors surface as
//! `stepbayes.StepbayesError` whose first argument is the error kind.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stepbayes::asymptotics::{badset_measure, psi_estimate_for, PsiMethod};
use stepbayes::cli::parse_function;
use stepbayes::entropy::{entropy_functional, shannon};
use stepbayes::io::{load_dataset, save_dataset};
use stepbayes::model::{integral, sample_dataset};
use stepbayes::predictive::{self, ZSource};
use stepbayes::sampler::{self, ChainSettings, TuningParams};
use stepbayes::{urn, HierarchyPrior, RegressionFunction};

create_exception!(stepbayes, StepbayesError, PyException);

fn py_err(e: stepbayes::Error) -> PyErr {
    StepbayesError::new_err((e.kind(), e.to_string()))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for stepbayes::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn prior(spec: &str) -> PyResult<HierarchyPrior> {
    spec.parse().py()
}

/// A binary-response dataset with distinct covariates in `[0, 1]`.
#[pyclass(name = "DataSet", module = "stepbayes", frozen)]
struct PyDataSet {
    inner: stepbayes::DataSet,
}

#[pymethods]
impl PyDataSet {
    #[new]
    fn new(x: Vec<f64>, y: Vec<bool>) -> PyResult<Self> {
        Ok(PyDataSet { inner: stepbayes::DataSet::new(x, y).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataSet { inner: load_dataset(path).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_dataset(&self.inner, path).py()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x().to_vec()
    }

    #[getter]
    fn y(&self) -> Vec<bool> {
        self.inner.y().to_vec()
    }

    #[getter]
    fn n_success(&self) -> u32 {
        self.inner.n_success()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("DataSet(n={}, successes={})", self.inner.len(), self.inner.n_success())
    }
}

/// A regression function on `[0, 1]`.
#[pyclass(name = "Function", module = "stepbayes", frozen)]
struct PyFunction {
    inner: stepbayes::Function,
    spec: String,
}

#[pymethods]
impl PyFunction {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyFunction { inner: parse_function(spec).py()?, spec: spec.to_string() })
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    fn values(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.into_iter().map(|x| self.inner.value(x)).collect()
    }

    /// `∫ h(f(x)) dx` with `h` the binary entropy in nats.
    fn entropy(&self) -> f64 {
        entropy_functional(&self.inner)
    }

    fn mean(&self) -> f64 {
        integral(&self.inner, 0.0, 1.0)
    }

    fn __repr__(&self) -> String {
        format!("Function({:?})", self.spec)
    }
}

#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    shannon(p)
}

#[pyfunction]
fn sample_dataset_from(f: &str, n: usize, seed: u64) -> PyResult<PyDataSet> {
    let f = parse_function(f).py()?;
    Ok(PyDataSet { inner: sample_dataset(&f, n, seed) })
}

#[pyfunction]
#[pyo3(signature = (data, m, n_max = 14))]
fn exact_log_z_m(data: &PyDataSet, m: usize, n_max: usize) -> PyResult<f64> {
    Ok(predictive::exact_log_z_m_with_limit(&data.inner, m, n_max).py()?.ln())
}

#[pyfunction]
fn series_log_z_m(data: &PyDataSet, m: usize) -> f64 {
    predictive::series_log_z_m(&data.inner, m).ln()
}

/// `(estimate, std_error)` of `ln Z_m` from uniform split draws.
#[pyfunction]
fn mc_log_z_m(py: Python<'_>, data: &PyDataSet, m: usize, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let e = py.detach(|| predictive::mc_log_z_m(&data.inner, m, n_samples, seed)).py()?;
    Ok((e.estimate.ln(), e.std_error))
}

#[pyfunction]
fn exact_log_z_star(data: &PyDataSet, lam: f64) -> PyResult<f64> {
    Ok(predictive::exact_log_z_star(&data.inner, lam).py()?.ln())
}

/// Posterior probabilities of `m = 0..=m_max` and the `ln Z_m` behind them.
#[pyfunction]
#[pyo3(signature = (data, prior_spec = "geometric:0.5", m_max = 10, source = "series", mc_samples = 100_000, seed = 0))]
fn model_posterior<'py>(
    py: Python<'py>,
    data: &PyDataSet,
    prior_spec: &str,
    m_max: usize,
    source: &str,
    mc_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let nu = prior(prior_spec)?;
    let source = match source {
        "exact" => ZSource::Exact,
        "series" => ZSource::Series,
        "mc" => ZSource::MonteCarlo { n_samples: mc_samples, seed },
        other => return Err(py_err(stepbayes::Error::Config(format!("unknown source `{other}`")))),
    };
    let post = py.detach(|| predictive::model_posterior(&data.inner, &nu, m_max, source)).py()?;
    let d = PyDict::new(py);
    d.set_item("probs", post.probs)?;
    d.set_item("log_z", post.log_z)?;
    d.set_item("prior_mass_covered", post.prior_mass_covered)?;
    d.set_item("truncated", post.truncated)?;
    Ok(d)
}

fn settings(n_iters: usize, burn_in: usize, thin: usize, move_width: f64) -> ChainSettings {
    ChainSettings {
        n_iters,
        burn_in,
        thin,
        tuning: TuningParams { move_width, ..TuningParams::default() },
        ..ChainSettings::default()
    }
}

/// Posterior mean on `grid + 1` equispaced nodes, with acceptance rates.
#[pyfunction]
#[pyo3(signature = (
    data, prior_spec = "geometric:0.5", grid = 1024, n_iters = 200_000, burn_in = 50_000, thin = 10,
    move_width = 0.05, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn posterior_fit<'py>(
    py: Python<'py>,
    data: &PyDataSet,
    prior_spec: &str,
    grid: usize,
    n_iters: usize,
    burn_in: usize,
    thin: usize,
    move_width: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let nu = prior(prior_spec)?;
    let s = settings(n_iters, burn_in, thin, move_width);
    let fit = py.detach(|| sampler::posterior_fit(&data.inner, &nu, &s, grid, seed)).py()?;
    let d = PyDict::new(py);
    d.set_item("values", fit.mean.values().to_vec())?;
    d.set_item("retained", fit.retained)?;
    d.set_item("birth_rate", fit.stats.birth.rate())?;
    d.set_item("death_rate", fit.stats.death.rate())?;
    d.set_item("move_rate", fit.stats.shift.rate())?;
    Ok(d)
}

/// Retained chain states as `(m, splits, log_target)` tuples.
#[pyfunction]
#[pyo3(signature = (data, prior_spec = "geometric:0.5", n_iters = 200_000, burn_in = 50_000, thin = 10, seed = 0))]
fn run_chain(
    py: Python<'_>,
    data: &PyDataSet,
    prior_spec: &str,
    n_iters: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> PyResult<Vec<(usize, Vec<f64>, f64)>> {
    let nu = prior(prior_spec)?;
    let s = settings(n_iters, burn_in, thin, TuningParams::default().move_width);
    let out = py.detach(|| sampler::run_chain(&data.inner, &nu, &s, seed)).py()?;
    Ok(out.samples.into_iter().map(|s| (s.m, s.u, s.log_target)).collect())
}

/// `(estimate, std_error)` of `n^{-1} ln Z*_{αn}` over replicate datasets.
#[pyfunction]
#[pyo3(signature = (f, alpha, n, replicates = 20, inner_samples = None, seed = 0))]
fn psi_estimate(
    py: Python<'_>,
    f: &str,
    alpha: f64,
    n: usize,
    replicates: usize,
    inner_samples: Option<usize>,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let func = parse_function(f).py()?;
    let method = match inner_samples {
        None => PsiMethod::Exact,
        Some(inner_samples) => PsiMethod::MonteCarlo { inner_samples },
    };
    let est = py.detach(|| psi_estimate_for(&func, f, alpha, n, replicates, method, seed)).py()?;
    Ok((est.estimate, est.std_error))
}

/// `(measure, witnesses)` of the `(ε, κ)`-bad set of `data` against `f`.
#[pyfunction]
fn badset(data: &PyDataSet, f: &str, epsilon: f64, kappa: f64) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let func = parse_function(f).py()?;
    let rep = badset_measure(&data.inner, &func, epsilon, kappa).py()?;
    Ok((rep.measure, rep.witnesses))
}

#[pyfunction]
fn recharge_prob(alpha: f64) -> PyResult<f64> {
    urn::recharge_prob(alpha).py()
}

/// Predictive probability of a blue draw after `prefix`.
#[pyfunction]
fn filter_q(prefix: Vec<bool>, r: f64) -> PyResult<f64> {
    urn::filter_q(&prefix, r).py()
}

/// `(k, mean, std_error)` for each `k`.
#[pyfunction]
fn relative_entropy_terms(
    py: Python<'_>,
    p: f64,
    r: f64,
    k: Vec<usize>,
    replicates: usize,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    let terms = py.detach(|| urn::relative_entropy_terms(p, r, &k, replicates, seed)).py()?;
    Ok(terms.into_iter().map(|t| (t.k, t.mean, t.std_error)).collect())
}

#[pyfunction]
fn exact_relative_entropy_term(p: f64, r: f64, k: usize) -> PyResult<f64> {
    urn::exact_relative_entropy_term(p, r, k).py()
}

/// Total variation distance for each prefix after `m` unobserved draws.
#[pyfunction]
fn mixing_distance(m: usize, r: f64, prefixes: Vec<Vec<bool>>) -> PyResult<Vec<f64>> {
    urn::mixing_distance(m, r, &prefixes).py()
}

#[pymodule(name = "stepbayes")]
fn stepbayes_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StepbayesError", m.py().get_type::<StepbayesError>())?;
    m.add("__version__", stepbayes::cli::VERSION)?;
    m.add_class::<PyDataSet>()?;
    m.add_class::<PyFunction>()?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(sample_dataset_from, m)?)?;
    m.add_function(wrap_pyfunction!(exact_log_z_m, m)?)?;
    m.add_function(wrap_pyfunction!(series_log_z_m, m)?)?;
    m.add_function(wrap_pyfunction!(mc_log_z_m, m)?)?;
    m.add_function(wrap_pyfunction!(exact_log_z_star, m)?)?;
    m.add_function(wrap_pyfunction!(model_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(psi_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(badset, m)?)?;
    m.add_function(wrap_pyfunction!(recharge_prob, m)?)?;
    m.add_function(wrap_pyfunction!(filter_q, m)?)?;
    m.add_function(wrap_pyfunction!(relative_entropy_terms, m)?)?;
    m.add_function(wrap_pyfunction!(exact_relative_entropy_term, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_distance, m)?)?;
    Ok(())
}
