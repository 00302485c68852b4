//! Python bindings for the `cavity_qsl` crate.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cavity_qsl::amplitude as amp;
use cavity_qsl::metrics as met;
use cavity_qsl::oracle;
use cavity_qsl::spectral::{self, Branch, SpectralModel, DEFAULT_LORENTZIAN_OMEGA0};
use cavity_qsl::sweep::{self, SweepSpec, SweepTarget};
use cavity_qsl::Error;

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.reason());
    match e {
        Error::InvalidParameter { .. } | Error::NegativeTime(_) | Error::InvalidState(_) | Error::UnknownFigure(_) => {
            PyValueError::new_err(msg)
        }
        _ => PyRuntimeError::new_err(msg),
    }
}

fn branch(j: u8) -> PyResult<Branch> {
    match j {
        1 => Ok(Branch::Lower),
        2 => Ok(Branch::Upper),
        _ => Err(PyValueError::new_err(format!("branch must be 1 or 2, got {j}"))),
    }
}

/// Atom–cavity parameters with a Lorentzian or Ohmic reservoir.
#[pyclass(name = "SystemParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySystemParams {
    inner: spectral::SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// Lorentzian reservoir in units of gamma0.
    #[staticmethod]
    #[pyo3(signature = (lam, delta = 0.0, coupling = 0.0, omega0 = DEFAULT_LORENTZIAN_OMEGA0))]
    fn lorentzian(lam: f64, delta: f64, coupling: f64, omega0: f64) -> PyResult<Self> {
        let model = SpectralModel::lorentzian(1.0, lam, delta).map_err(to_py)?;
        let inner = spectral::SystemParams::new(omega0, coupling, model).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Ohmic reservoir in units of omega0.
    #[staticmethod]
    #[pyo3(signature = (omega_c, coupling = 0.0))]
    fn ohmic(omega_c: f64, coupling: f64) -> PyResult<Self> {
        let inner = spectral::SystemParams::ohmic(omega_c, coupling).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.model.family().to_string()
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    fn with_coupling(&self, coupling: f64) -> PyResult<Self> {
        let inner = self.inner.with_coupling(coupling);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        match self.inner.model {
            SpectralModel::Lorentzian { lambda, delta, .. } => format!(
                "SystemParams.lorentzian(lam={lambda}, delta={delta}, coupling={}, omega0={})",
                self.inner.coupling, self.inner.omega0
            ),
            SpectralModel::Ohmic { omega_c } => {
                format!("SystemParams.ohmic(omega_c={omega_c}, coupling={})", self.inner.coupling)
            }
        }
    }
}

/// Excited-state amplitude A(t).
#[pyfunction]
fn amplitude(sys: PySystemParams, t: f64) -> PyResult<Complex64> {
    amp::amplitude(&sys.inner, t).map_err(to_py)
}

/// |A(t)|².
#[pyfunction]
fn excited_population(sys: PySystemParams, t: f64) -> PyResult<f64> {
    amp::excited_population(&sys.inner, t).map_err(to_py)
}

/// Decay rate of dressed branch 1 (ω₀ − Ω) or 2 (ω₀ + Ω).
#[pyfunction]
fn decay_rate(sys: PySystemParams, j: u8, t: f64) -> PyResult<f64> {
    spectral::decay_rate(&sys.inner, branch(j)?, t).map_err(to_py)
}

#[pyfunction]
fn beta(sys: PySystemParams, j: u8, t: f64) -> PyResult<f64> {
    spectral::beta(&sys.inner, branch(j)?, t).map_err(to_py)
}

#[pyfunction]
fn decay_rate_bruteforce(py: Python<'_>, sys: PySystemParams, j: u8, t: f64) -> PyResult<f64> {
    let b = branch(j)?;
    py.detach(|| oracle::decay_rate_bruteforce(&sys.inner, b, t)).map_err(to_py)
}

/// Dict with n_blp, qslt_ratio, final_pop, relation_residual and the rising
/// segments of |A|².
#[pyfunction]
fn metrics<'py>(py: Python<'py>, sys: PySystemParams, tau: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = py.detach(|| met::evaluate(&sys.inner, tau)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_blp", m.n_blp)?;
    d.set_item("qslt_ratio", m.qslt_ratio)?;
    d.set_item("final_pop", m.final_pop)?;
    d.set_item("relation_residual", m.relation_residual())?;
    d.set_item("segments", m.segments)?;
    Ok(d)
}

#[pyfunction]
fn non_markovianity(py: Python<'_>, sys: PySystemParams, tau: f64) -> PyResult<f64> {
    py.detach(|| met::non_markovianity(&sys.inner, tau)).map_err(to_py)
}

#[pyfunction]
fn qslt_ratio(py: Python<'_>, sys: PySystemParams, tau: f64) -> PyResult<f64> {
    py.detach(|| met::qslt_ratio(&sys.inner, tau)).map_err(to_py)
}

/// Dict of equal-length lists: t, amplitude, pop, pop_rate, gamma, shift
/// (None where A vanishes).
#[pyfunction]
#[pyo3(signature = (sys, tau, n = 201))]
fn trajectory<'py>(py: Python<'py>, sys: PySystemParams, tau: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let tr = amp::sample_trajectory(&sys.inner, tau, n).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t", tr.times)?;
    d.set_item("amplitude", tr.amp)?;
    d.set_item("pop", tr.pop)?;
    d.set_item("pop_rate", tr.pop_rate)?;
    d.set_item("gamma", tr.gamma_t)?;
    d.set_item("shift", tr.shift_t)?;
    Ok(d)
}

fn spec(sys: PySystemParams, target: &str, lo: f64, hi: f64, steps: usize, tau: f64) -> PyResult<SweepSpec> {
    let target: SweepTarget = target.parse().map_err(to_py)?;
    SweepSpec::new(target, (lo, hi), steps, tau, sys.inner).map_err(to_py)
}

/// Rows `(param, n_blp, qslt_ratio, final_pop)`; failed points carry NaN.
#[pyfunction]
#[pyo3(signature = (sys, target, lo, hi, steps = sweep::DEFAULT_STEPS, tau = 1.0))]
fn run_sweep(
    py: Python<'_>,
    sys: PySystemParams,
    target: &str,
    lo: f64,
    hi: f64,
    steps: usize,
    tau: f64,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let spec = spec(sys, target, lo, hi, steps, tau)?;
    let rows = py.detach(|| sweep::run_sweep(&spec)).map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.param, r.n_blp, r.qslt_ratio, r.final_pop))
        .collect())
}

/// Onset of N > threshold along the sweep; returns (value, (lo, hi)).
#[pyfunction]
#[pyo3(signature = (sys, target, lo, hi, tau = 1.0, threshold = sweep::DEFAULT_THRESHOLD, steps = sweep::DEFAULT_STEPS))]
#[allow(clippy::too_many_arguments)]
fn find_critical(
    py: Python<'_>,
    sys: PySystemParams,
    target: &str,
    lo: f64,
    hi: f64,
    tau: f64,
    threshold: f64,
    steps: usize,
) -> PyResult<(f64, (f64, f64))> {
    let spec = spec(sys, target, lo, hi, steps, tau)?;
    let c = py.detach(|| sweep::find_critical(&spec, threshold)).map_err(to_py)?;
    Ok((c.value, c.bracket))
}

/// Atomic trajectory from the dressed-basis master equation:
/// (times, rho11, rho10).
#[pyfunction]
fn evolve_dressed(py: Python<'_>, sys: PySystemParams, tau: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Complex64>)> {
    let r = py.detach(|| oracle::evolve_dressed(&sys.inner, tau)).map_err(to_py)?;
    let rho11 = r.states.iter().map(|s| s.rho11).collect();
    let rho10 = r.states.iter().map(|s| s.rho10).collect();
    Ok((r.times, rho11, rho10))
}

/// Built-in oracle battery: list of (name, max_error, threshold, passed).
#[pyfunction]
fn oracle_check(py: Python<'_>) -> Vec<(String, f64, f64, bool)> {
    py.detach(oracle::default_battery)
        .into_iter()
        .map(|c| {
            let passed = c.passed();
            (c.name, c.max_error, c.threshold, passed)
        })
        .collect()
}

#[pymodule]
fn cavity_qsl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_function(wrap_pyfunction!(amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(excited_population, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(non_markovianity, m)?)?;
    m.add_function(wrap_pyfunction!(qslt_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_critical, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_dressed, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
