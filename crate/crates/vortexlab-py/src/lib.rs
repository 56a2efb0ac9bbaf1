//! Python bindings: profiles, neutral modes, Rayleigh eigenvalues, mode-block
//! spectra, time stepping and the reproduce recipes.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use vortexlab::cli::{self, recipes, CliError, Recipe};
use vortexlab::evolve::{self, RunConfig};
use vortexlab::fields::{self, BackgroundConfig, Cutoff};
use vortexlab::profile::{ProfileDescriptor, ProfileParams};
use vortexlab::rayleigh::{self, RayleighConfig, Rectangle};
use vortexlab::specmat::{self, GridConfig};
use vortexlab::sturm::{self, SturmConfig};
use vortexlab::{bifurcation, io, CriticalPoint};

fn py_err<E: Into<CliError>>(e: E) -> PyErr {
    let e: CliError = e.into();
    if e.exit_code() == cli::EXIT_VALIDATION {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Serialize through JSON into plain Python dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = io::to_json(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn critical_point(which: &str) -> PyResult<CriticalPoint> {
    match which {
        "a" => Ok(CriticalPoint::Inner),
        "b" => Ok(CriticalPoint::Outer),
        other => Err(PyValueError::new_err(format!("which must be 'a' or 'b', got {other:?}"))),
    }
}

/// Background differential-rotation profile Ξ with A = Ξ″ + 2Ξ′.
#[pyclass(name = "Profile", module = "vortexlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: vortexlab::Profile,
}

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (alpha_bar = 0.5, b = 1000.0))]
    fn new(alpha_bar: f64, b: f64) -> PyResult<Self> {
        let inner = vortexlab::Profile::build(&ProfileParams::new(alpha_bar, b)).map_err(py_err)?;
        Ok(PyProfile { inner })
    }

    #[staticmethod]
    fn reference() -> PyResult<Self> {
        Self::new(0.5, 1000.0)
    }

    /// Rebuild from a descriptor written by `to_json` or `vortexlab profile build`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let d: ProfileDescriptor = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = vortexlab::Profile::from_descriptor(&d).map_err(py_err)?;
        Ok(PyProfile { inner })
    }

    /// (1 - sigma) p0 + sigma p1.
    #[staticmethod]
    fn interpolate(p0: &PyProfile, p1: &PyProfile, sigma: f64) -> PyResult<Self> {
        let inner = vortexlab::Profile::interpolate(&p0.inner, &p1.inner, sigma).map_err(py_err)?;
        Ok(PyProfile { inner })
    }

    fn to_json(&self) -> String {
        io::to_json(&self.inner.descriptor()).expect("descriptor serializes")
    }

    fn xi(&self, t: f64) -> f64 {
        self.inner.xi(t)
    }

    fn xi_prime(&self, t: f64) -> f64 {
        self.inner.xi_prime(t)
    }

    fn a(&self, t: f64) -> f64 {
        self.inner.a(t)
    }

    #[getter]
    fn alpha_bar(&self) -> f64 {
        self.inner.alpha_bar()
    }

    #[getter]
    fn xi_minus_inf(&self) -> f64 {
        self.inner.xi_minus_inf()
    }

    /// Class checks as a dict with `checks`, `moment_residual`, ...
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }

    fn __repr__(&self) -> String {
        match self.inner.params() {
            Some(p) => format!("Profile(alpha_bar={}, B={})", p.alpha_bar, p.slope),
            None => format!("Profile(alpha_bar={}, blend)", self.inner.alpha_bar()),
        }
    }
}

/// Ground state of L_c at critical level `which` ('a' or 'b').
#[pyfunction]
#[pyo3(signature = (profile, which = "a"))]
fn smallest_eigenvalue<'py>(py: Python<'py>, profile: &PyProfile, which: &str) -> PyResult<Bound<'py, PyAny>> {
    let c = critical_point(which)?;
    let mode = py.detach(|| sturm::smallest_eigenvalue(&profile.inner, c, &SturmConfig::default())).map_err(py_err)?;
    to_py(py, &mode)
}

/// (lambda_a, lambda_b, m_a, m_b).
#[pyfunction]
fn neutral_wavenumbers(py: Python<'_>, profile: &PyProfile) -> PyResult<(f64, f64, f64, f64)> {
    let nw = py.detach(|| sturm::neutral_wavenumbers(&profile.inner, &SturmConfig::default())).map_err(py_err)?;
    Ok((nw.lambda_a, nw.lambda_b, nw.m_a, nw.m_b))
}

/// Blend p0 and p1 so that m0 lies strictly inside ]m_b, m_a[.
#[pyfunction]
#[pyo3(signature = (p0, p1, m0, step = 0.02))]
fn tune(py: Python<'_>, p0: &PyProfile, p1: &PyProfile, m0: u32, step: f64) -> PyResult<(PyProfile, f64)> {
    let report = py
        .detach(|| sturm::tune_for_integer_mode(&p0.inner, &p1.inner, m0, step, &SturmConfig::default()))
        .map_err(py_err)?;
    let sigma = report.sigma;
    Ok((PyProfile { inner: report.profile.expect("tuning returns its blend") }, sigma))
}

/// Relative Wronskian miss W(m, z)/scale.
#[pyfunction]
fn evans(py: Python<'_>, profile: &PyProfile, m: f64, z: Complex64) -> PyResult<Complex64> {
    let e = py.detach(|| rayleigh::evans(&profile.inner, m, z, &RayleighConfig::default())).map_err(py_err)?;
    Ok(e.relative())
}

/// Rayleigh eigenvalues z (Im z > im_min) at wavenumber m.
#[pyfunction]
#[pyo3(signature = (profile, m, im_min = 1e-4))]
fn find_eigenvalues(py: Python<'_>, profile: &PyProfile, m: f64, im_min: f64) -> PyResult<Vec<Complex64>> {
    let region = Rectangle { im_min, ..Rectangle::default_for(&profile.inner) };
    let modes =
        py.detach(|| rayleigh::find_eigenvalues(&profile.inner, m, &region, &RayleighConfig::default())).map_err(py_err)?;
    Ok(modes.iter().map(|e| e.z).collect())
}

/// (h, z_pred, z_num, ratio)
type BranchRow = (f64, Complex64, Option<Complex64>, Option<f64>);

/// Plemelj prediction against shooting, one row per step h.
#[pyfunction]
fn bifurcation_table(
    py: Python<'_>,
    profile: &PyProfile,
    h: Vec<f64>,
) -> PyResult<Vec<BranchRow>> {
    let report = py
        .detach(|| {
            bifurcation::verify_bifurcation(
                &profile.inner,
                &h,
                &SturmConfig::default(),
                &bifurcation::PlemeljConfig::default(),
                &RayleighConfig::default(),
            )
        })
        .map_err(py_err)?;
    Ok(report.rows.iter().map(|r| (r.h, r.z_pred, r.z_num, r.ratio)).collect())
}

/// Dense spectrum of the m-th block: (all eigenvalues, unstable eigenvalues).
#[pyfunction]
#[pyo3(signature = (profile, m, n = 1024, threshold = 1e-6))]
fn spectrum(py: Python<'_>, profile: &PyProfile, m: f64, n: usize, threshold: f64) -> PyResult<(Vec<Complex64>, Vec<Complex64>)> {
    let spec = py
        .detach(|| {
            let op = specmat::assemble(&profile.inner, m, &GridConfig::with_n(n))?;
            specmat::spectrum(&op, threshold)
        })
        .map_err(py_err)?;
    let unstable = spec.unstable.iter().map(|u| u.lambda).collect();
    Ok((spec.eigenvalues, unstable))
}

/// Norm history (tau, norm) of the m-th block from seeded random data.
#[pyfunction]
#[pyo3(signature = (profile, m, tau_end, dt, seed = 0, n = 1024, record_every = 100))]
#[allow(clippy::too_many_arguments)]
fn evolve_norms(
    py: Python<'_>,
    profile: &PyProfile,
    m: f64,
    tau_end: f64,
    dt: f64,
    seed: u64,
    n: usize,
    record_every: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let op = specmat::assemble(&profile.inner, m, &GridConfig::with_n(n)).map_err(py_err)?;
    let mut cfg = RunConfig::new(tau_end, dt);
    cfg.record_every = record_every;
    let traj = py.detach(|| evolve::run(&op, &evolve::random_data(&op, seed), &cfg)).map_err(py_err)?;
    Ok((traj.tau, traj.norms))
}

/// Background-field norms over `times`; rows as dicts.
#[pyfunction]
#[pyo3(signature = (profile, times, beta = 3.0, alpha = None, p = 3.0))]
fn norm_scan<'py>(
    py: Python<'py>,
    profile: &PyProfile,
    times: Vec<f64>,
    beta: f64,
    alpha: Option<f64>,
    p: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = BackgroundConfig { beta, alpha: alpha.unwrap_or(profile.inner.alpha_bar()), chi: Cutoff::default(), p };
    let scan = py.detach(|| fields::norm_scan(&cfg, &profile.inner, &times)).map_err(py_err)?;
    to_py(py, &scan)
}

/// Run one reproduce recipe; returns (passed, rendered report).
#[pyfunction]
#[pyo3(signature = (recipe, profile = None))]
fn reproduce(py: Python<'_>, recipe: &str, profile: Option<&PyProfile>) -> PyResult<(bool, String)> {
    let id = Recipe::all()
        .into_iter()
        .find(|r| r.id() == recipe)
        .ok_or_else(|| PyValueError::new_err(format!("unknown recipe {recipe:?}")))?;
    let report = py.detach(|| recipes::run(id, profile.map(|p| &p.inner))).map_err(py_err)?;
    Ok((report.passed(), report.render()))
}

#[pymodule]
fn vortexlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(smallest_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(neutral_wavenumbers, m)?)?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    m.add_function(wrap_pyfunction!(evans, m)?)?;
    m.add_function(wrap_pyfunction!(find_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(bifurcation_table, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_norms, m)?)?;
    m.add_function(wrap_pyfunction!(norm_scan, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
