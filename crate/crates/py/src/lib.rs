//! Python module `rotman`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rotman_core::beamspace::{self, LensResponse, Metric};
use rotman_core::config::RunConfig;
use rotman_core::coupling::{self, LensModel};
use rotman_core::fdtd::{validate_line_source, ValidationConfig};
use rotman_core::lens;
use rotman_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::Domain(_) | Error::Invalid(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn load_config(config_json: Option<&str>) -> PyResult<RunConfig> {
    match config_json {
        Some(text) => RunConfig::from_json(text, std::path::Path::new("<python>")).map_err(py_err),
        None => Ok(RunConfig::default()),
    }
}

#[pyclass(name = "LensGeometry", frozen)]
struct PyLensGeometry {
    inner: lens::LensGeometry,
}

#[pymethods]
impl PyLensGeometry {
    #[getter]
    fn n_beam(&self) -> usize {
        self.inner.n_beam()
    }

    #[getter]
    fn n_array(&self) -> usize {
        self.inner.n_array()
    }

    #[getter]
    fn f1(&self) -> f64 {
        self.inner.f1
    }

    #[getter]
    fn eps_eff(&self) -> f64 {
        self.inner.eps_eff
    }

    /// Design beam angles in radians, port 1 first.
    #[getter]
    fn beam_angles(&self) -> Vec<f64> {
        self.inner.beam_angles()
    }

    #[getter]
    fn array_contour(&self) -> Vec<(f64, f64)> {
        self.inner.array_contour.iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn line_lengths(&self) -> Vec<f64> {
        self.inner.line_lengths.clone()
    }

    fn max_path_residual(&self) -> f64 {
        lens::max_path_residual(&self.inner)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        rotman_core::geometry_csv::export_geometry(&self.inner, &path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "LensGeometry(n_beam={}, n_array={}, f1={:.4e})",
            self.inner.n_beam(),
            self.inner.n_array(),
            self.inner.f1
        )
    }
}

#[pyclass(name = "CouplingVector", frozen)]
struct PyCouplingVector {
    inner: coupling::CouplingVector,
}

#[pymethods]
impl PyCouplingVector {
    #[getter]
    fn doa(&self) -> f64 {
        self.inner.doa
    }

    /// 1-based.
    #[getter]
    fn peak_port(&self) -> usize {
        self.inner.peak_port
    }

    #[getter]
    fn focus_fraction(&self) -> f64 {
        self.inner.focus_fraction
    }

    #[getter]
    fn spillover_fraction(&self) -> f64 {
        self.inner.spillover_fraction
    }

    #[getter]
    fn beam_amplitudes(&self) -> Vec<Complex64> {
        self.inner.beam_amplitudes.clone()
    }

    /// Beam amplitudes in absolute terms (power wave over the square root of injected power).
    #[getter]
    fn transmission(&self) -> Vec<Complex64> {
        self.inner.transmission()
    }

    #[getter]
    fn array_reflections(&self) -> Vec<Complex64> {
        self.inner.array_reflections.clone()
    }

    fn powers(&self) -> Vec<f64> {
        self.inner.powers()
    }

    fn top_two_gap_db(&self) -> f64 {
        self.inner.top_two_gap_db()
    }

    fn __repr__(&self) -> String {
        format!(
            "CouplingVector(doa_deg={:.3}, peak_port={}, spillover={:.4})",
            self.inner.doa.to_degrees(),
            self.inner.peak_port,
            self.inner.spillover_fraction
        )
    }
}

#[pyclass(name = "CouplingTable", frozen)]
struct PyCouplingTable {
    inner: coupling::CouplingTable,
}

#[pymethods]
impl PyCouplingTable {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        coupling::CouplingTable::read(&path)
            .map(|inner| PyCouplingTable { inner })
            .map_err(py_err)
    }

    #[getter]
    fn doa_grid(&self) -> Vec<f64> {
        self.inner.doa_grid.clone()
    }

    #[getter]
    fn n_beam(&self) -> usize {
        self.inner.n_beam()
    }

    fn interpolate(&self, theta: f64) -> PyResult<PyCouplingVector> {
        self.inner
            .interpolate(theta)
            .map(|inner| PyCouplingVector { inner })
            .map_err(py_err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.doa_grid.len()
    }
}

#[pyclass(name = "SystemResult", frozen)]
struct PySystemResult {
    inner: beamspace::SystemResult,
}

fn metric(name: &str) -> PyResult<Metric> {
    match name {
        "desired" => Ok(Metric::Desired),
        "interference" => Ok(Metric::Interference),
        other => Err(PyValueError::new_err(format!("unknown metric {other:?}"))),
    }
}

#[pymethods]
impl PySystemResult {
    #[getter]
    fn models(&self) -> Vec<String> {
        self.inner.models.iter().map(|m| m.model.clone()).collect()
    }

    #[getter]
    fn n_trials(&self) -> usize {
        self.inner.n_trials
    }

    /// Median linear power over all users of `model`.
    fn median(&self, model: &str, metric_name: &str) -> PyResult<f64> {
        self.inner
            .median(model, metric(metric_name)?)
            .ok_or_else(|| PyValueError::new_err(format!("no samples for model {model:?}")))
    }

    /// Linear samples of one user (1-based), in trial order.
    fn samples(&self, model: &str, user: usize, metric_name: &str) -> PyResult<Vec<f64>> {
        let m = self
            .inner
            .model(model)
            .ok_or_else(|| PyValueError::new_err(format!("unknown model {model:?}")))?;
        let u = user
            .checked_sub(1)
            .and_then(|i| m.users.get(i))
            .ok_or_else(|| PyValueError::new_err(format!("no user {user}")))?;
        Ok(match metric(metric_name)? {
            Metric::Desired => u.desired.clone(),
            Metric::Interference => u.interference.clone(),
        })
    }

    fn results_csv(&self) -> String {
        self.inner.results_csv()
    }

    fn cdf_csv(&self) -> String {
        self.inner.cdf_csv()
    }
}

/// Synthesize the lens described by the `lens` section of a JSON config (defaults if omitted).
#[pyfunction]
#[pyo3(signature = (config_json=None))]
fn synthesize(config_json: Option<&str>) -> PyResult<PyLensGeometry> {
    let cfg = load_config(config_json)?;
    let params = cfg.lens.params().map_err(py_err)?;
    lens::synthesize(&params)
        .map(|inner| PyLensGeometry { inner })
        .map_err(py_err)
}

#[pyfunction]
fn ideal_coupling(theta: f64, beam_angles: Vec<f64>) -> PyCouplingVector {
    PyCouplingVector {
        inner: beamspace::ideal_coupling(theta, &beam_angles),
    }
}

/// Run the FDTD model for one DoA (radians).
#[pyfunction]
#[pyo3(signature = (theta, config_json=None))]
fn doa_response(py: Python<'_>, theta: f64, config_json: Option<&str>) -> PyResult<PyCouplingVector> {
    let cfg = load_config(config_json)?;
    let params = cfg.lens.params().map_err(py_err)?;
    let g = lens::synthesize(&params).map_err(py_err)?;
    let v = py
        .detach(|| {
            let model = LensModel::new(&g, &cfg.fdtd)?;
            coupling::doa_response(theta, &model)
        })
        .map_err(py_err)?;
    Ok(PyCouplingVector { inner: v })
}

/// Paired Monte Carlo over the ideal model and, when `table` is given, the aberrated one.
#[pyfunction]
#[pyo3(signature = (n_trials, seed, table=None, config_json=None))]
fn monte_carlo(
    py: Python<'_>,
    n_trials: usize,
    seed: u64,
    table: Option<&PyCouplingTable>,
    config_json: Option<&str>,
) -> PyResult<PySystemResult> {
    let cfg = load_config(config_json)?;
    let params = cfg.lens.params().map_err(py_err)?;
    let g = lens::synthesize(&params).map_err(py_err)?;
    let sys = cfg.system.params(&params).map_err(py_err)?;
    let mut models = vec![LensResponse::ideal(g.beam_angles())];
    if let Some(t) = table {
        models.push(LensResponse::aberrated(t.inner.clone()).map_err(py_err)?);
    }
    let inner = py
        .detach(|| beamspace::monte_carlo(&sys, &models, n_trials, seed))
        .map_err(py_err)?;
    Ok(PySystemResult { inner })
}

#[pyfunction]
fn empirical_cdf(samples: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    beamspace::empirical_cdf(&samples).map_err(py_err)
}

/// Line-source check; returns (max magnitude error, max phase error in degrees, residual energy ratio).
#[pyfunction]
#[pyo3(signature = (resolution=20.0, size=300))]
fn validate_fdtd(py: Python<'_>, resolution: f64, size: usize) -> PyResult<(f64, f64, f64)> {
    let vc = ValidationConfig {
        n: size,
        resolution,
        ..ValidationConfig::default()
    };
    let r = py.detach(|| validate_line_source(&vc)).map_err(py_err)?;
    Ok((r.max_magnitude_error, r.max_phase_error_deg, r.final_energy_ratio))
}

#[pymodule]
fn rotman(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLensGeometry>()?;
    m.add_class::<PyCouplingVector>()?;
    m.add_class::<PyCouplingTable>()?;
    m.add_class::<PySystemResult>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(doa_response, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(validate_fdtd, m)?)?;
    Ok(())
}
