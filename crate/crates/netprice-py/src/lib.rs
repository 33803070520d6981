//! Python bindings. Parameters travel as keyword arguments overlaid on the
//! Rust defaults; structured results come back as plain dicts and lists.

use netprice::ensemble::EnsembleSpec;
use netprice::netgen::{self, Economy, NetworkParams};
use netprice::pipeline::{self, BaselineSpec, RunOutput, RunSpec};
use netprice::pricing::HazardSpec;
use netprice::{spectral, theory};
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

create_exception!(netprice, NumericalError, PyArithmeticError, "A numerical stage failed or a model assumption was violated.");

fn core_err(e: netprice::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON into native Python objects.
fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn kwargs_value(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Value> {
    let Some(kw) = kwargs else { return Ok(Value::Object(Default::default())) };
    let text: String = kw.py().import("json")?.call_method1("dumps", (kw,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

/// Recursive overlay; every key in `patch` must already exist in `base`.
pub fn overlay(base: Value, patch: Value, path: &str) -> Result<Value, String> {
    match (base, patch) {
        (Value::Object(mut b), Value::Object(p)) => {
            for (k, v) in p {
                let key = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                let cur = b.remove(&k).ok_or_else(|| format!("unknown parameter `{key}`"))?;
                b.insert(k, overlay(cur, v, &key)?);
            }
            Ok(Value::Object(b))
        }
        (_, p) => Ok(p),
    }
}

fn build<T: Serialize + DeserializeOwned>(base: &T, patch: Value) -> PyResult<T> {
    let merged = overlay(serde_json::to_value(base).map_err(value_err)?, patch, "").map_err(PyValueError::new_err)?;
    serde_json::from_value(merged).map_err(value_err)
}

/// `hazard` may be given as True/False or as a dict of hazard settings.
pub fn run_spec_from(mut patch: Value) -> Result<RunSpec, String> {
    if let Some(h) = patch.get_mut("hazard") {
        let default = serde_json::to_value(HazardSpec::default()).unwrap();
        *h = match h.take() {
            Value::Bool(true) => default,
            Value::Bool(false) | Value::Null => Value::Null,
            obj @ Value::Object(_) => overlay(default, obj, "hazard")?,
            other => return Err(format!("invalid value for `hazard`: {other}")),
        };
    }
    let merged = overlay(serde_json::to_value(RunSpec::default()).unwrap(), patch, "")?;
    serde_json::from_value(merged).map_err(|e| e.to_string())
}

/// A drawn production network.
#[pyclass(name = "Economy", module = "netprice", frozen)]
struct PyEconomy {
    inner: Economy,
}

#[pymethods]
impl PyEconomy {
    /// Draws a network; keyword arguments override the default parameters.
    #[new]
    #[pyo3(signature = (**params))]
    fn new(py: Python<'_>, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let params: NetworkParams = build(&NetworkParams::default(), kwargs_value(params)?)?;
        let inner = py.detach(|| netgen::build_economy(&params)).map_err(core_err)?;
        Ok(PyEconomy { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyEconomy { inner: Economy::from_json(text).map_err(core_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(core_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees.clone()
    }

    #[getter]
    fn sectors(&self) -> Vec<u8> {
        self.inner.sectors.clone()
    }

    #[getter]
    fn tilt(&self) -> f64 {
        self.inner.tilt
    }

    #[getter]
    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary.clone()
    }

    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.params)
    }

    fn knn_slope(&self) -> Option<f64> {
        netgen::knn_slope(&self.inner)
    }

    /// λ2, gap, v1, v2, u2 and relaxation time.
    fn spectral<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let s = py.detach(|| spectral::subdominant_pair(&self.inner)).map_err(core_err)?;
        to_py(py, &s)
    }

    /// Runs money, prices and statistics on this network.
    #[pyo3(signature = (**spec))]
    fn simulate(&self, py: Python<'_>, spec: Option<&Bound<'_, PyDict>>) -> PyResult<PyRun> {
        let mut spec = run_spec_from(kwargs_value(spec)?).map_err(PyValueError::new_err)?;
        spec.network = self.inner.params.clone();
        let economy = self.inner.clone();
        let out = py.detach(|| pipeline::run_on(economy, &spec)).map_err(core_err)?;
        Ok(PyRun { out, spec })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.params;
        format!("Economy(n={}, alpha={}, nu={}, seed={}, tilt={:.4})", p.n, p.alpha, p.nu, p.seed, self.inner.tilt)
    }
}

/// One simulated run.
#[pyclass(name = "Run", module = "netprice", frozen)]
struct PyRun {
    out: RunOutput,
    spec: RunSpec,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn lambda2(&self) -> f64 {
        self.out.spectral.lambda2
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.out.flexible_stats.phi.clone()
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.out.flexible_stats.omega.clone()
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.out.flexible_stats.psi.clone()
    }

    #[getter]
    fn sticky_omega(&self) -> Option<Vec<f64>> {
        self.out.sticky_stats.as_ref().map(|s| s.omega.clone())
    }

    #[getter]
    fn mass(&self) -> Vec<f64> {
        self.out.trajectory.mass.clone()
    }

    #[getter]
    fn misalignment(&self) -> Vec<f64> {
        self.out.trajectory.misalignment.clone()
    }

    /// Balances m_t for t = 0..=T, one list per period.
    #[getter]
    fn balances(&self) -> Vec<Vec<f64>> {
        self.out.trajectory.balances.clone()
    }

    #[getter]
    fn prices(&self) -> Vec<Vec<f64>> {
        self.out.flexible.prices.clone()
    }

    #[getter]
    fn sticky_prices(&self) -> Option<Vec<Vec<f64>>> {
        self.out.sticky.as_ref().map(|p| p.prices.clone())
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.spec)
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.out.summary())
    }

    /// Closed-form predictions evaluated on this run.
    #[pyo3(signature = (calvo_eta = 0.5, menu = (0.5, 1.0, 0.1)))]
    fn theory<'py>(&self, py: Python<'py>, calvo_eta: f64, menu: (f64, f64, f64)) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.out.theory(&self.spec, &BaselineSpec { calvo_eta, menu }))
    }
}

/// Draws a network from `network` (a dict) and runs it.
#[pyfunction]
#[pyo3(signature = (**spec))]
fn simulate(py: Python<'_>, spec: Option<&Bound<'_, PyDict>>) -> PyResult<PyRun> {
    let spec = run_spec_from(kwargs_value(spec)?).map_err(PyValueError::new_err)?;
    let out = py.detach(|| pipeline::run(&spec)).map_err(core_err)?;
    Ok(PyRun { out, spec })
}

/// Independent replications with summary statistics per horizon.
#[pyfunction]
#[pyo3(signature = (replications = 50, base_seed = 0, horizons = vec![1, 5, 10, 60], **spec))]
fn ensemble<'py>(
    py: Python<'py>,
    replications: usize,
    base_seed: u64,
    horizons: Vec<usize>,
    spec: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let run = run_spec_from(kwargs_value(spec)?).map_err(PyValueError::new_err)?;
    let spec = EnsembleSpec { replications, base_seed, run, horizons };
    let report = py.detach(|| netprice::ensemble::run(&spec)).map_err(core_err)?;
    to_py(py, &report)
}

#[pyfunction]
fn calvo_baselines<'py>(py: Python<'py>, pi: f64, eta: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &theory::calvo_baselines(pi, eta).map_err(core_err)?)
}

#[pyfunction]
fn menu_cost_baselines<'py>(py: Python<'py>, pi: f64, eta0: f64, beta: f64, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
    let m = theory::menu_cost_baselines(pi, |p| theory::menu_cost_hazard(eta0, beta, kappa, p)).map_err(core_err)?;
    to_py(py, &m)
}

#[pyfunction]
fn wronskian_band<'py>(py: Python<'py>, lambda2: f64, pi: f64, c_ub: f64, mu_i: f64, t: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &theory::wronskian_band(lambda2, pi, c_ub, mu_i, t).map_err(core_err)?)
}

#[pyfunction]
fn sticky_window<'py>(
    py: Python<'py>,
    lambda2: f64,
    pi: f64,
    c_ub: f64,
    m_tilde: f64,
    t: usize,
    t_reset: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &theory::sticky_window(lambda2, pi, c_ub, m_tilde, t, t_reset).map_err(core_err)?)
}

/// Moments, normal-quantile correlation and two-sigma exceedance.
#[pyfunction]
fn concentration_check<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &netprice::ensemble::concentration_check(&values))
}

#[pymodule]
#[pyo3(name = "netprice")]
fn netprice_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEconomy>()?;
    m.add_class::<PyRun>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(calvo_baselines, m)?)?;
    m.add_function(wrap_pyfunction!(menu_cost_baselines, m)?)?;
    m.add_function(wrap_pyfunction!(wronskian_band, m)?)?;
    m.add_function(wrap_pyfunction!(sticky_window, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_check, m)?)?;
    Ok(())
}
