//! Python bindings for the `orlicz` crate.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use orlicz::chaining::sufficient_m as core_sufficient_m;
use orlicz::config::{trig_of_dim, ExperimentConfig};
use orlicz::density::{kw_measure, lewis_basis as core_lewis_basis, LewisSolution as CoreLewis};
use orlicz::norm::{lp_norm as core_lp_norm, luxemburg_norm as core_luxemburg_norm, modular as core_modular};
use orlicz::phi::{estimate_indices, log_grid, phi_inverse, GRID_HI, GRID_LO, GRID_SIZE};
use orlicz::recovery::recovery_constant as core_recovery_constant;
use orlicz::subspace::{make_monomial_space, make_trig_space, Subspace as CoreSubspace};
use orlicz::{DiscreteMeasure, Error, PhiFunction, PhiSpec, SampledFunction};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. }
        | Error::InvalidPhi(_)
        | Error::InvalidMeasure(_)
        | Error::InvalidSubspace(_)
        | Error::InvalidArgument(_)
        | Error::LengthMismatch { .. }
        | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A Φ-function with its index metadata.
#[pyclass(name = "Phi", frozen)]
struct Phi(PhiFunction);

#[pymethods]
impl Phi {
    /// `t^p`.
    #[staticmethod]
    fn power(p: f64) -> PyResult<Self> {
        PhiFunction::power(p).map(Phi).map_err(to_py)
    }

    /// `t^p (ln(e+t))^α / (ln(e+1/t))^β`.
    #[staticmethod]
    fn pab(p: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        PhiFunction::pab(p, alpha, beta).map(Phi).map_err(to_py)
    }

    /// Builds from a JSON spec such as `{"family": "power", "p": 2}`.
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        let spec: PhiSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.build().map(Phi).map_err(to_py)
    }

    fn __call__(&self, t: f64) -> f64 {
        self.0.eval(t)
    }

    fn deriv(&self, t: f64) -> f64 {
        self.0.deriv(t)
    }

    #[pyo3(signature = (y, tol = 1e-12))]
    fn inverse(&self, y: f64, tol: f64) -> PyResult<f64> {
        phi_inverse(&self.0, y, tol).map_err(to_py)
    }

    /// Grid estimates `(p_hat, q_hat)` of the indices.
    fn estimate_indices(&self) -> PyResult<(f64, f64)> {
        let est = estimate_indices(&self.0, &log_grid(GRID_LO, GRID_HI, GRID_SIZE)).map_err(to_py)?;
        Ok((est.p_hat, est.q_hat))
    }

    #[getter]
    fn lower_index(&self) -> f64 {
        self.0.lower_index
    }

    #[getter]
    fn upper_index(&self) -> f64 {
        self.0.upper_index
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label.clone()
    }

    fn __repr__(&self) -> String {
        format!("Phi({})", self.0.label)
    }
}

/// A probability measure on finitely many points.
#[pyclass(name = "Measure", frozen)]
struct Measure(DiscreteMeasure);

#[pymethods]
impl Measure {
    #[new]
    fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> PyResult<Self> {
        DiscreteMeasure::new(points, weights).map(Measure).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (n, d = 1))]
    fn torus_grid(n: usize, d: usize) -> PyResult<Self> {
        DiscreteMeasure::torus_grid(n, d).map(Measure).map_err(to_py)
    }

    #[staticmethod]
    fn interval_grid(n: usize, a: f64, b: f64) -> PyResult<Self> {
        DiscreteMeasure::interval_grid(n, a, b).map(Measure).map_err(to_py)
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// A finite-dimensional function space on a grid.
#[pyclass(name = "Subspace", frozen)]
struct Subspace(CoreSubspace);

#[pymethods]
impl Subspace {
    /// Symmetric trigonometric polynomials of odd dimension `n`.
    #[staticmethod]
    fn trig(n: usize, grid: &Measure) -> PyResult<Self> {
        trig_of_dim(n, &grid.0).map(Subspace).map_err(to_py)
    }

    /// Trigonometric polynomials with the given frequency vectors.
    #[staticmethod]
    fn trig_frequencies(freqs: Vec<Vec<i64>>, grid: &Measure) -> PyResult<Self> {
        make_trig_space(&freqs, &grid.0).map(Subspace).map_err(to_py)
    }

    #[staticmethod]
    fn monomial(degree: usize, grid: &Measure) -> PyResult<Self> {
        make_monomial_space(degree, &grid.0).map(Subspace).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `sup ‖f‖_∞ / ‖f‖_2` over the space, on its grid.
    fn nikolskii_constant(&self) -> f64 {
        self.0.nikolskii_constant()
    }

    fn christoffel(&self) -> Vec<f64> {
        self.0.christoffel()
    }
}

/// Result of the Lewis change-of-density solve.
#[pyclass(name = "LewisSolution", frozen)]
struct LewisSolution(CoreLewis);

#[pymethods]
impl LewisSolution {
    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn c_dim(&self) -> f64 {
        self.0.c_dim()
    }

    #[getter]
    fn density(&self) -> Vec<f64> {
        self.0.density.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    /// `(orthogonality, normalization)` residuals.
    #[getter]
    fn residuals(&self) -> (f64, f64) {
        (self.0.orthogonality_residual, self.0.normalization_residual)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }
}

fn sampled(values: Vec<Complex64>, nu: &DiscreteMeasure) -> PyResult<SampledFunction> {
    if values.len() != nu.len() {
        return Err(to_py(Error::LengthMismatch {
            expected: nu.len(),
            got: values.len(),
        }));
    }
    Ok(SampledFunction::new(values))
}

#[pyfunction]
fn modular(phi: &Phi, values: Vec<Complex64>, nu: &Measure) -> PyResult<f64> {
    core_modular(&phi.0, &sampled(values, &nu.0)?, &nu.0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (phi, values, nu, tol = 1e-12))]
fn luxemburg_norm(phi: &Phi, values: Vec<Complex64>, nu: &Measure, tol: f64) -> PyResult<f64> {
    core_luxemburg_norm(&phi.0, &sampled(values, &nu.0)?, &nu.0, tol).map_err(to_py)
}

#[pyfunction]
fn lp_norm(values: Vec<Complex64>, nu: &Measure, p: f64) -> PyResult<f64> {
    core_lp_norm(&sampled(values, &nu.0)?, &nu.0, p).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (phi, x, nu, tol = 1e-8))]
fn lewis_basis(py: Python<'_>, phi: &Phi, x: &Subspace, nu: &Measure, tol: f64) -> PyResult<LewisSolution> {
    py.detach(|| core_lewis_basis(&phi.0, &x.0, &nu.0, tol))
        .map(LewisSolution)
        .map_err(to_py)
}

/// Optimal design weights on `grid`; returns `(weights, max_sigma, iterations)`.
#[pyfunction]
#[pyo3(signature = (x, grid, tol = 1e-3))]
fn kw_design(py: Python<'_>, x: &Subspace, grid: &Measure, tol: f64) -> PyResult<(Vec<f64>, f64, usize)> {
    let d = py.detach(|| kw_measure(&x.0, &grid.0, tol)).map_err(to_py)?;
    Ok((d.measure.weights().to_vec(), d.max_sigma, d.iterations))
}

#[pyfunction]
fn sufficient_m(phi: &Phi, p: f64, n: usize, h: f64, eps: f64, c_user: f64) -> PyResult<u64> {
    core_sufficient_m(&phi.0, p, n, h, eps, c_user).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (phi, psi, p, d, cphi = 1.0, cpsi = 1.0))]
fn recovery_constant(phi: &Phi, psi: &Phi, p: f64, d: f64, cphi: f64, cpsi: f64) -> f64 {
    core_recovery_constant(&phi.0, &psi.0, p, d, cphi, cpsi)
}

/// Runs a JSON experiment config and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config, base_dir = None))]
fn run_config(py: Python<'_>, config: &str, base_dir: Option<PathBuf>) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json_str(config).map_err(to_py)?;
    let base = base_dir.unwrap_or_default();
    let out = py.detach(|| orlicz::runner::run(&cfg, &base)).map_err(to_py)?;
    out.report.to_json().map_err(to_py)
}

#[pymodule]
fn orlicz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Phi>()?;
    m.add_class::<Measure>()?;
    m.add_class::<Subspace>()?;
    m.add_class::<LewisSolution>()?;
    m.add_function(wrap_pyfunction!(modular, m)?)?;
    m.add_function(wrap_pyfunction!(luxemburg_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lewis_basis, m)?)?;
    m.add_function(wrap_pyfunction!(kw_design, m)?)?;
    m.add_function(wrap_pyfunction!(sufficient_m, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
