//! Python bindings for `alphaloss`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use alphaloss::boost::{self, BoostConfig};
use alphaloss::data::{self, CsvOptions};
use alphaloss::experiment::{self, ExperimentConfig};
use alphaloss::linear::{self, metrics, TrainConfig};
use alphaloss::losses;
use alphaloss::theory::{self, Grid, LsProblem};

create_exception!(pyalphaloss, AlphaLossError, PyException);

fn err(e: alphaloss::Error) -> PyErr {
    AlphaLossError::new_err(e.to_string())
}

/// α from a float or the string "inf".
fn alpha(obj: &Bound<'_, PyAny>) -> PyResult<losses::Alpha> {
    if let Ok(s) = obj.extract::<String>() {
        return s.parse().map_err(err);
    }
    losses::Alpha::new(obj.extract::<f64>()?).map_err(err)
}

#[pyfunction]
fn loss(a: &Bound<'_, PyAny>, z: f64) -> PyResult<f64> {
    Ok(losses::loss(alpha(a)?, z))
}

#[pyfunction]
fn loss_d1(a: &Bound<'_, PyAny>, z: f64) -> PyResult<f64> {
    Ok(losses::loss_d1(alpha(a)?, z))
}

#[pyfunction]
fn loss_d2(a: &Bound<'_, PyAny>, z: f64) -> PyResult<f64> {
    Ok(losses::loss_d2(alpha(a)?, z))
}

#[pyfunction]
fn loss_d3(a: &Bound<'_, PyAny>, z: f64) -> PyResult<f64> {
    Ok(losses::loss_d3(alpha(a)?, z))
}

#[pyfunction]
fn sigmoid(z: f64) -> f64 {
    losses::sigmoid(z)
}

/// Labelled dataset with labels in {-1, +1}.
#[pyclass(name = "Dataset", module = "pyalphaloss")]
struct PyDataset(alphaloss::Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> PyResult<Self> {
        alphaloss::Dataset::new(rows, labels).map(PyDataset).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.0.n_features()
    }

    #[getter]
    fn labels(&self) -> Vec<i8> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn flipped_fraction(&self) -> f64 {
        self.0.flipped_fraction()
    }

    fn with_noise(&self, p: f64, seed: u64) -> PyResult<Self> {
        data::inject_symmetric_noise(&self.0, p, seed).map(PyDataset).map_err(err)
    }

    fn split(&self, test_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (a, b) = self.0.split(test_fraction, seed).map_err(err)?;
        Ok((PyDataset(a), PyDataset(b)))
    }
}

#[pyfunction]
fn long_servedio(m: usize, seed: u64) -> PyResult<PyDataset> {
    data::long_servedio_experiment(m, seed).map(PyDataset).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (mu_pos, mu_neg, sigma, prior_pos, m, seed))]
fn gmm_sample(mu_pos: Vec<f64>, mu_neg: Vec<f64>, sigma: f64, prior_pos: f64, m: usize, seed: u64) -> PyResult<PyDataset> {
    let spec = alphaloss::GmmSpec::new(mu_pos, mu_neg, sigma, prior_pos).map_err(err)?;
    data::gmm_sample(&spec, m, seed).map(PyDataset).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (path, label_column, positive_token, negative_token=None, ignore_columns=Vec::new(), min_max_scale=false))]
fn load_csv(
    path: PathBuf,
    label_column: &str,
    positive_token: &str,
    negative_token: Option<String>,
    ignore_columns: Vec<String>,
    min_max_scale: bool,
) -> PyResult<PyDataset> {
    let mut opts = CsvOptions::new(label_column, positive_token);
    opts.negative_token = negative_token;
    opts.ignore_columns = ignore_columns;
    opts.min_max_scale = min_max_scale;
    data::load_csv(path, &opts).map(PyDataset).map_err(err)
}

/// Weighted vote of decision trees.
#[pyclass(name = "Ensemble", module = "pyalphaloss")]
struct PyEnsemble(boost::Ensemble);

#[pymethods]
impl PyEnsemble {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs.clone()
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.score(&x).map_err(err)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<i8> {
        self.0.predict(&x).map_err(err)
    }

    fn accuracy(&self, ds: &PyDataset) -> PyResult<f64> {
        Ok(metrics(&self.0, &ds.0).map_err(err)?.accuracy)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        boost::Ensemble::from_json(s).map(PyEnsemble).map_err(err)
    }
}

/// AdaBoost.α. Returns the ensemble and one dict per round.
#[pyfunction]
#[pyo3(signature = (train, alpha, rounds, max_depth=1, test=None))]
fn adaboost<'py>(
    py: Python<'py>,
    train: &PyDataset,
    alpha: &Bound<'py, PyAny>,
    rounds: usize,
    max_depth: usize,
    test: Option<&PyDataset>,
) -> PyResult<(PyEnsemble, Vec<Bound<'py, PyDict>>)> {
    let cfg = BoostConfig::new(self::alpha(alpha)?, rounds, max_depth);
    let (ens, trace) = boost::adaboost_alpha(&train.0, &cfg, test.map(|t| &t.0)).map_err(err)?;
    let rows = trace
        .rounds
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("round", r.round)?;
            d.set_item("epsilon", r.epsilon)?;
            d.set_item("theta", r.theta)?;
            d.set_item("train_err", r.train_err)?;
            d.set_item("test_err", r.test_err)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyEnsemble(ens), rows))
}

/// Linear classifier `sign(θ·x + b)`.
#[pyclass(name = "LinearModel", module = "pyalphaloss")]
struct PyLinear(alphaloss::LinearParams);

#[pymethods]
impl PyLinear {
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.0.theta.clone()
    }

    #[getter]
    fn bias(&self) -> Option<f64> {
        self.0.bias
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.score(&x).map_err(err)
    }

    fn accuracy(&self, ds: &PyDataset) -> PyResult<f64> {
        Ok(metrics(&self.0, &ds.0).map_err(err)?.accuracy)
    }
}

/// Full-batch gradient descent on the empirical α-risk.
#[pyfunction]
#[pyo3(signature = (train, alpha, learning_rate=1e-2, max_epochs=100_000, tol=1e-6))]
fn train_linear(
    train: &PyDataset,
    alpha: &Bound<'_, PyAny>,
    learning_rate: f64,
    max_epochs: usize,
    tol: f64,
) -> PyResult<(PyLinear, usize)> {
    let mut cfg = TrainConfig::new(self::alpha(alpha)?);
    cfg.learning_rate = learning_rate;
    cfg.max_epochs = max_epochs;
    cfg.tol = tol;
    let (params, trace) = linear::train(&train.0, &cfg).map_err(err)?;
    Ok((PyLinear(params), trace.epochs()))
}

#[pyfunction]
fn chi(p: f64, s: f64, alpha: &Bound<'_, PyAny>) -> PyResult<f64> {
    linear::chi(p, s, self::alpha(alpha)?).map_err(err)
}

#[pyfunction]
fn bn_crossover(n: f64, alpha: &Bound<'_, PyAny>) -> PyResult<Option<f64>> {
    theory::bn_crossover(n, self::alpha(alpha)?).map_err(err)
}

/// `(θ₁, residual)` of the robust stationary point.
#[pyfunction]
fn theorem1_root(n: usize, gamma: f64, alpha: &Bound<'_, PyAny>) -> PyResult<(f64, f64)> {
    let prob = LsProblem::new(n, gamma, self::alpha(alpha)?).map_err(err)?;
    let r = theory::theorem1_root(&prob).map_err(err)?;
    Ok((r.theta1, r.residual))
}

/// `(θ₁, θ₂, value)` minimising the landscape on `[lo, hi]²`.
#[pyfunction]
fn ls_grid_search(n: usize, gamma: f64, alpha: &Bound<'_, PyAny>, lo: f64, hi: f64, step: f64) -> PyResult<(f64, f64, f64)> {
    let prob = LsProblem::new(n, gamma, self::alpha(alpha)?).map_err(err)?;
    let m = theory::ls_grid_search(&prob, &Grid::square(lo, hi, step)).map_err(err)?;
    Ok((m.theta1, m.theta2, m.value))
}

#[pyfunction]
fn ls_landscape(n: usize, gamma: f64, alpha: &Bound<'_, PyAny>, theta1: f64, theta2: f64) -> PyResult<f64> {
    let prob = LsProblem::new(n, gamma, self::alpha(alpha)?).map_err(err)?;
    Ok(theory::ls_landscape(&prob, theta1, theta2))
}

/// Run a JSON experiment config; returns the number of result rows.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir, jobs=None))]
fn run_experiment(config_json: &str, out_dir: PathBuf, jobs: Option<usize>) -> PyResult<usize> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    Ok(experiment::run(&cfg, &out_dir, jobs).map_err(err)?.rows)
}

/// Aggregate a results.csv; one dict per group.
#[pyfunction]
fn summarize<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
    experiment::summarize(&path)
        .map_err(err)?
        .into_iter()
        .map(|a| {
            let d = PyDict::new(py);
            d.set_item("experiment", a.experiment)?;
            d.set_item("alpha", a.alpha)?;
            d.set_item("p", a.p)?;
            d.set_item("depth", a.depth)?;
            d.set_item("T", a.rounds)?;
            d.set_item("metric", a.metric)?;
            d.set_item("n", a.n)?;
            d.set_item("mean", a.mean)?;
            d.set_item("ci_low", a.ci_low)?;
            d.set_item("ci_high", a.ci_high)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pyalphaloss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AlphaLossError", m.py().get_type::<AlphaLossError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyLinear>()?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(loss_d1, m)?)?;
    m.add_function(wrap_pyfunction!(loss_d2, m)?)?;
    m.add_function(wrap_pyfunction!(loss_d3, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(long_servedio, m)?)?;
    m.add_function(wrap_pyfunction!(gmm_sample, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(adaboost, m)?)?;
    m.add_function(wrap_pyfunction!(train_linear, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(bn_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_root, m)?)?;
    m.add_function(wrap_pyfunction!(ls_grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(ls_landscape, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
