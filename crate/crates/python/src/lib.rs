//! Python interface to the `rna` crate.

use numpy::{PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2, ToPyArray};
use pyo3::create_exception;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rna::io::Precision;
use rna::optimizers::RunOptions;
use rna::{IterateSequence, OptimizerConfig, RnaConfig, RnaError, WeightTarget};

create_exception!(pyrna, RnaException, pyo3::exceptions::PyException);

struct PyRnaError(RnaError);

impl From<RnaError> for PyRnaError {
    fn from(e: RnaError) -> Self {
        PyRnaError(e)
    }
}

impl From<PyRnaError> for PyErr {
    fn from(e: PyRnaError) -> PyErr {
        RnaException::new_err(e.0.to_string())
    }
}

type Res<T> = Result<T, PyRnaError>;

fn parse_target(target: &str) -> PyResult<WeightTarget> {
    match target {
        "latest" => Ok(WeightTarget::LatestK),
        "oldest" => Ok(WeightTarget::OldestK),
        other => Err(pyo3::exceptions::PyValueError::new_err(format!(
            "target must be 'latest' or 'oldest', got {other:?}"
        ))),
    }
}

fn sequence_from(iterates: PyReadonlyArray2<'_, f64>) -> Res<IterateSequence> {
    let view = iterates.as_array();
    let rows = view.outer_iter().map(|row| row.to_vec()).collect();
    Ok(IterateSequence::new(rows)?)
}

fn sequence_to_array<'py>(py: Python<'py>, seq: &IterateSequence) -> Bound<'py, PyArray2<f64>> {
    let rows: Vec<Vec<f64>> = seq.iterates().to_vec();
    PyArray2::from_vec2_bound(py, &rows).expect("rows have equal length")
}

/// Extrapolation settings.
#[pyclass(name = "RnaConfig")]
#[derive(Clone)]
struct PyRnaConfig {
    inner: RnaConfig,
}

#[pymethods]
impl PyRnaConfig {
    #[new]
    #[pyo3(signature = (window=rna::DEFAULT_WINDOW, lam=rna::DEFAULT_LAMBDA, lambda_grid=None, target="latest"))]
    fn new(window: usize, lam: f64, lambda_grid: Option<Vec<f64>>, target: &str) -> PyResult<Self> {
        let inner = RnaConfig {
            window,
            lambda: lam,
            lambda_grid,
            weight_target: parse_target(target)?,
        };
        inner.validate().map_err(PyRnaError)?;
        Ok(Self { inner })
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn lambda_grid(&self) -> Option<Vec<f64>> {
        self.inner.lambda_grid.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RnaConfig(window={}, lam={:e}, lambda_grid={:?})",
            self.inner.window, self.inner.lambda, self.inner.lambda_grid
        )
    }
}

/// Residual matrix of a `(m, d)` iterate array, returned as `(d, m - 1)`.
#[pyfunction]
fn build_residuals<'py>(py: Python<'py>, iterates: PyReadonlyArray2<'py, f64>) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let seq = sequence_from(iterates)?;
    let r = rna::build_residuals(&seq).map_err(PyRnaError)?;
    let rows: Vec<Vec<f64>> = (0..r.dim())
        .map(|i| r.columns().map(|c| c[i]).collect())
        .collect();
    Ok(PyArray2::from_vec2_bound(py, &rows).expect("rectangular"))
}

/// Raw weights `z` solving `(R^T R + lam I) z = 1` for a `(d, K)` residual matrix.
#[pyfunction]
fn solve_regularized<'py>(
    py: Python<'py>,
    residuals: PyReadonlyArray2<'py, f64>,
    lam: f64,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let view = residuals.as_array();
    let columns: Vec<Vec<f64>> = view.columns().into_iter().map(|c| c.to_vec()).collect();
    let r = rna::ResidualMatrix::from_columns(&columns).map_err(PyRnaError)?;
    let z = rna::solve_regularized(&r, lam).map_err(PyRnaError)?;
    Ok(z.to_pyarray_bound(py))
}

/// Extrapolates the last `window + 1` rows of a `(m, d)` iterate array.
///
/// Returns `(theta, coefficients, lambda_used)`.
#[pyfunction]
#[pyo3(signature = (iterates, window=rna::DEFAULT_WINDOW, lam=rna::DEFAULT_LAMBDA, target="latest"))]
fn rna_extrapolate<'py>(
    py: Python<'py>,
    iterates: PyReadonlyArray2<'py, f64>,
    window: usize,
    lam: f64,
    target: &str,
) -> PyResult<(Bound<'py, PyArray1<f64>>, Bound<'py, PyArray1<f64>>, f64)> {
    let seq = sequence_from(iterates)?;
    let cfg = RnaConfig::new(window, lam).with_target(parse_target(target)?);
    let out = rna::rna(&seq, &cfg).map_err(PyRnaError)?;
    Ok((
        out.theta.to_pyarray_bound(py),
        out.coefficients.weights.to_pyarray_bound(py),
        out.coefficients.lambda_used,
    ))
}

/// Grid search over `config.lambda_grid`, scoring candidates with `score(theta) -> float`.
///
/// Returns `(theta, lambda_or_None, score)`.
#[pyfunction]
fn adaptive_rna<'py>(
    py: Python<'py>,
    iterates: PyReadonlyArray2<'py, f64>,
    config: &PyRnaConfig,
    score: Bound<'py, PyAny>,
) -> PyResult<(Bound<'py, PyArray1<f64>>, Option<f64>, f64)> {
    let seq = sequence_from(iterates)?;
    let mut callback_error: Option<PyErr> = None;
    let out = rna::adaptive_rna_by(&seq, &config.inner, |cand| {
        let arr = cand.theta.to_pyarray_bound(py);
        match score.call1((arr,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                callback_error.get_or_insert(e);
                f64::NAN
            }
        }
    })
    .map_err(PyRnaError)?;
    if let Some(e) = callback_error {
        return Err(e);
    }
    Ok((out.theta.to_pyarray_bound(py), out.lambda, out.score))
}

/// Fixed-capacity window of epoch-tagged snapshots.
#[pyclass(name = "SlidingBuffer")]
struct PySlidingBuffer {
    inner: rna::SlidingBuffer,
}

#[pymethods]
impl PySlidingBuffer {
    #[new]
    fn new(capacity: usize) -> PyResult<Self> {
        Ok(Self {
            inner: rna::SlidingBuffer::new(capacity).map_err(PyRnaError)?,
        })
    }

    fn push(&mut self, epoch: i64, theta: PyReadonlyArray1<'_, f64>) -> PyResult<()> {
        let v = theta.as_array().to_vec();
        self.inner.push(epoch, v).map_err(PyRnaError)?;
        Ok(())
    }

    fn epochs(&self) -> Vec<i64> {
        self.inner.epochs()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// The window as a `(len, d)` array, oldest first.
    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let seq = self.inner.snapshot().map_err(PyRnaError)?;
        Ok(sequence_to_array(py, &seq))
    }

    #[pyo3(signature = (window=rna::DEFAULT_WINDOW, lam=rna::DEFAULT_LAMBDA))]
    fn accelerate<'py>(&self, py: Python<'py>, window: usize, lam: f64) -> PyResult<Bound<'py, PyArray1<f64>>> {
        let seq = self.inner.snapshot().map_err(PyRnaError)?;
        let out = rna::rna(&seq, &RnaConfig::new(window, lam)).map_err(PyRnaError)?;
        Ok(out.theta.to_pyarray_bound(py))
    }
}

/// A built-in objective with gradient oracle.
#[pyclass(name = "Problem")]
struct PyProblem {
    inner: Box<dyn rna::Problem>,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    #[pyo3(signature = (dim, condition, seed=0))]
    fn quadratic(dim: usize, condition: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: Box::new(rna::Quadratic::new(dim, condition, seed).map_err(PyRnaError)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n_samples, dim, l2, seed=0))]
    fn logistic(n_samples: usize, dim: usize, l2: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: Box::new(rna::Logistic::new(n_samples, dim, l2, seed).map_err(PyRnaError)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (d_in, hidden, n_samples, seed=0))]
    fn mlp(d_in: usize, hidden: usize, n_samples: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: Box::new(rna::Mlp::new(d_in, hidden, n_samples, seed).map_err(PyRnaError)?),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn smoothness(&self) -> Option<f64> {
        self.inner.smoothness()
    }

    fn value(&self, theta: PyReadonlyArray1<'_, f64>) -> PyResult<f64> {
        let t = self.checked(theta)?;
        Ok(self.inner.value(&t))
    }

    fn gradient<'py>(&self, py: Python<'py>, theta: PyReadonlyArray1<'py, f64>) -> PyResult<Bound<'py, PyArray1<f64>>> {
        let t = self.checked(theta)?;
        Ok(self.inner.gradient(&t).to_pyarray_bound(py))
    }

    fn optimum<'py>(&self, py: Python<'py>) -> Option<Bound<'py, PyArray1<f64>>> {
        self.inner.optimum().map(|o| o.to_pyarray_bound(py))
    }

    /// Runs the optimizer with per-epoch extrapolation and returns a dict of
    /// per-epoch arrays (`objective`, `grad_norm`, `objective_rna`,
    /// `grad_norm_rna`, `lambda_used`) plus the final `theta` and `theta_rna`.
    #[pyo3(signature = (theta0, epochs, eta=None, momentum=0.0, weight_decay=0.0, config=None))]
    fn run_with_rna<'py>(
        &self,
        py: Python<'py>,
        theta0: PyReadonlyArray1<'py, f64>,
        epochs: usize,
        eta: Option<f64>,
        momentum: f64,
        weight_decay: f64,
        config: Option<&PyRnaConfig>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t0 = self.checked(theta0)?;
        let eta = match eta.or_else(|| self.inner.smoothness().map(|l| 1.0 / l)) {
            Some(e) => e,
            None => {
                return Err(pyo3::exceptions::PyValueError::new_err(
                    "eta is required for problems without a smoothness constant",
                ))
            }
        };
        let opt = OptimizerConfig {
            eta,
            momentum,
            weight_decay,
            ..OptimizerConfig::gradient_descent(eta)
        };
        let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
        let out = rna::run_with_rna(self.inner.as_ref(), &t0, &opt, Some(&cfg), epochs, RunOptions::default())
            .map_err(PyRnaError)?;
        let rows = rna::harness::metric_rows(&out);
        let col = |f: fn(&rna::io::MetricRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let dict = PyDict::new_bound(py);
        dict.set_item("objective", col(|r| r.objective).to_pyarray_bound(py))?;
        dict.set_item("grad_norm", col(|r| r.grad_norm).to_pyarray_bound(py))?;
        dict.set_item("objective_rna", col(|r| r.objective_rna).to_pyarray_bound(py))?;
        dict.set_item("grad_norm_rna", col(|r| r.grad_norm_rna).to_pyarray_bound(py))?;
        dict.set_item("lambda_used", col(|r| r.lambda_used).to_pyarray_bound(py))?;
        let last = out.vanilla.records.last().expect("epochs >= 1");
        dict.set_item("theta", last.theta.to_pyarray_bound(py))?;
        dict.set_item("theta_rna", out.rna.last().expect("epochs >= 1").theta.to_pyarray_bound(py))?;
        Ok(dict)
    }
}

impl PyProblem {
    fn checked(&self, theta: PyReadonlyArray1<'_, f64>) -> PyResult<Vec<f64>> {
        let t = theta.as_array().to_vec();
        if t.len() != self.inner.dim() {
            return Err(PyRnaError(RnaError::DimensionMismatch {
                expected: self.inner.dim(),
                got: t.len(),
            })
            .into());
        }
        Ok(t)
    }
}

/// Writes a `(m, d)` array as a checkpoint sequence.
#[pyfunction]
#[pyo3(signature = (path, iterates, precision="f64"))]
fn write_checkpoints(path: &str, iterates: PyReadonlyArray2<'_, f64>, precision: &str) -> PyResult<()> {
    let seq = sequence_from(iterates)?;
    let p: Precision = precision.parse().map_err(pyo3::exceptions::PyValueError::new_err)?;
    rna::io::write_checkpoints(path, &seq, p).map_err(PyRnaError)?;
    Ok(())
}

/// Reads a checkpoint file (or directory) into a `(m, d)` array.
#[pyfunction]
fn read_checkpoints<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let seq = rna::io::read_checkpoint_path(path).map_err(PyRnaError)?;
    Ok(sequence_to_array(py, &seq))
}

#[pymodule]
fn pyrna(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRnaConfig>()?;
    m.add_class::<PySlidingBuffer>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(build_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(solve_regularized, m)?)?;
    m.add_function(wrap_pyfunction!(rna_extrapolate, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_rna, m)?)?;
    m.add_function(wrap_pyfunction!(write_checkpoints, m)?)?;
    m.add_function(wrap_pyfunction!(read_checkpoints, m)?)?;
    m.add("RnaError", m.py().get_type_bound::<RnaException>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
