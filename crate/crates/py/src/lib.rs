//! Python bindings: `import dlab`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dlab_core::kk::{self, KkOptions};
use dlab_core::model::{self, SlabCalibration};
use dlab_core::numerics::{FrequencyGrid as CoreGrid, RealSeries};
use dlab_core::pulse::{self, PulseSpec};
use dlab_core::{Complex64, Error};

create_exception!(dlab, DlabError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidConfig(_)
        | Error::InvalidIndexModel(_)
        | Error::InvalidPulse(_)
        | Error::LengthMismatch { .. }
        | Error::NonFinite { .. } => PyValueError::new_err(e.to_string()),
        _ => DlabError::new_err(e.to_string()),
    }
}

#[pyclass(name = "IndexModel", frozen)]
struct IndexModel(model::IndexModel);

#[pymethods]
impl IndexModel {
    #[staticmethod]
    fn constant(n: f64) -> PyResult<Self> {
        let m = model::IndexModel::constant(n);
        m.validate().map_err(to_py)?;
        Ok(Self(m))
    }

    #[staticmethod]
    fn linear(n0: f64, slope: f64, omega_ref: f64) -> PyResult<Self> {
        let m = model::IndexModel::linear(n0, slope, omega_ref);
        m.validate().map_err(to_py)?;
        Ok(Self(m))
    }

    #[staticmethod]
    fn lorentz(n_inf: f64, strength: f64, omega0: f64, gamma: f64) -> PyResult<Self> {
        let m = model::IndexModel::lorentz(n_inf, strength, omega0, gamma);
        m.validate().map_err(to_py)?;
        Ok(Self(m))
    }

    fn index(&self, omega: f64) -> f64 {
        self.0.index(omega)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(name = "SystemConfig", frozen)]
struct SystemConfig(model::SystemConfig);

#[pymethods]
impl SystemConfig {
    #[new]
    fn new(
        thickness: f64,
        air_path: f64,
        theta: f64,
        beta: f64,
        index_te: PyRef<'_, IndexModel>,
        index_tm: PyRef<'_, IndexModel>,
    ) -> PyResult<Self> {
        model::SystemConfig::new(thickness, air_path, theta, beta, index_te.0, index_tm.0)
            .map(Self)
            .map_err(to_py)
    }

    /// Constant-index slab with its first half-waveplate frequency at `half_wave_hz`.
    #[staticmethod]
    #[pyo3(signature = (theta, beta, half_wave_hz=16.75e9, thickness=0.2, index_tm=1.34, air_path=1.0))]
    fn calibrated(
        theta: f64,
        beta: f64,
        half_wave_hz: f64,
        thickness: f64,
        index_tm: f64,
        air_path: f64,
    ) -> PyResult<Self> {
        SlabCalibration {
            half_wave_hz,
            thickness,
            index_tm,
            air_path,
        }
        .config(theta, beta)
        .map(Self)
        .map_err(to_py)
    }

    fn with_beta(&self, beta: f64) -> PyResult<Self> {
        self.0.with_beta(beta).map(Self).map_err(to_py)
    }

    #[getter]
    fn thickness(&self) -> f64 {
        self.0.thickness()
    }

    #[getter]
    fn air_path(&self) -> f64 {
        self.0.air_path()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(thickness={}, air_path={}, theta={}, beta={})",
            self.0.thickness(),
            self.0.air_path(),
            self.0.theta(),
            self.0.beta()
        )
    }
}

#[pyclass(name = "FrequencyGrid", frozen)]
struct FrequencyGrid(CoreGrid);

#[pymethods]
impl FrequencyGrid {
    #[new]
    fn new(omega_min: f64, omega_max: f64, count: usize) -> PyResult<Self> {
        CoreGrid::new(omega_min, omega_max, count).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_hz(f_min: f64, f_max: f64, count: usize) -> PyResult<Self> {
        CoreGrid::from_hz(f_min, f_max, count).map(Self).map_err(to_py)
    }

    fn omegas(&self) -> Vec<f64> {
        self.0.omegas()
    }

    fn __len__(&self) -> usize {
        self.0.count()
    }
}

fn series(grid: &FrequencyGrid, values: Vec<f64>) -> PyResult<RealSeries> {
    RealSeries::new(grid.0, values).map_err(to_py)
}

#[pyfunction]
fn transfer_h(config: PyRef<'_, SystemConfig>, omega: f64) -> Complex64 {
    model::transfer_h(&config.0, omega)
}

#[pyfunction]
fn transfer_from_phases(theta: f64, beta: f64, phi_te: f64, phi_tm: f64) -> Complex64 {
    model::transfer_from_phases(theta, beta, phi_te, phi_tm)
}

#[pyfunction]
fn magnitude_h(config: PyRef<'_, SystemConfig>, omega: f64) -> f64 {
    model::magnitude_h(&config.0, omega)
}

#[pyfunction]
fn absolute_phase(config: PyRef<'_, SystemConfig>, omega: f64) -> f64 {
    model::absolute_phase(&config.0, omega)
}

#[pyfunction]
fn group_delay(config: PyRef<'_, SystemConfig>, omega: f64) -> f64 {
    model::group_delay(&config.0, omega).seconds
}

#[pyfunction]
fn half_waveplate_frequencies(config: PyRef<'_, SystemConfig>, grid: PyRef<'_, FrequencyGrid>) -> Vec<f64> {
    let orders = model::zero_orders_for_band(&config.0, &grid.0);
    model::half_waveplate_frequencies(&config.0, &grid.0, orders)
        .roots
        .iter()
        .map(|r| r.omega)
        .collect()
}

/// `[(n, omega, half_plane, residual)]` for zeros with real part in band.
#[pyfunction]
fn transfer_zeros(
    config: PyRef<'_, SystemConfig>,
    grid: PyRef<'_, FrequencyGrid>,
) -> PyResult<Vec<(i64, Complex64, &'static str, f64)>> {
    let g = &grid.0;
    let found = model::transfer_zeros(&config.0, g, model::zero_orders_for_band(&config.0, g))
        .map_err(to_py)?;
    Ok(found
        .with_real_part_in(g.omega_min(), g.omega_max())
        .map(|z| (z.n, z.omega, z.half_plane.as_str(), z.residual))
        .collect())
}

#[pyfunction]
fn classify_minimum_phase(config: PyRef<'_, SystemConfig>, grid: PyRef<'_, FrequencyGrid>) -> PyResult<&'static str> {
    kk::classify_minimum_phase(&config.0, &grid.0)
        .map(|c| c.as_str())
        .map_err(to_py)
}

#[pyfunction]
fn kk_re_from_im(grid: PyRef<'_, FrequencyGrid>, im: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let out = kk::kk_re_from_im(&series(&grid, im)?).map_err(to_py)?;
    Ok(out.values().to_vec())
}

#[pyfunction]
fn kk_im_from_re(grid: PyRef<'_, FrequencyGrid>, re: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let out = kk::kk_im_from_re(&series(&grid, re)?).map_err(to_py)?;
    Ok(out.values().to_vec())
}

#[pyfunction]
#[pyo3(signature = (grid, magnitude, d0=0.0))]
fn phase_from_magnitude(
    grid: PyRef<'_, FrequencyGrid>,
    magnitude: Vec<f64>,
    d0: f64,
) -> PyResult<Vec<Option<f64>>> {
    let r = kk::phase_from_magnitude(&series(&grid, magnitude)?, d0).map_err(to_py)?;
    Ok(r.phase().values().to_vec())
}

/// Phase reconstruction of the model compared with its closed form.
#[pyfunction]
#[pyo3(signature = (config, grid, correct=false, interior_fraction=0.6))]
fn reconstruct_model_phase<'py>(
    py: Python<'py>,
    config: PyRef<'_, SystemConfig>,
    grid: PyRef<'_, FrequencyGrid>,
    correct: bool,
    interior_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let options = KkOptions {
        interior_fraction,
        correct,
        ..KkOptions::default()
    };
    let cmp = kk::reconstruct_model_phase(&config.0, &grid.0, options).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("classification", cmp.classification.as_str())?;
    d.set_item("d0", cmp.fit.d0)?;
    d.set_item("offset", cmp.fit.offset)?;
    d.set_item("correction_applied", cmp.reconstruction.correction_applied())?;
    d.set_item("model_phase", cmp.model_phase.values().to_vec())?;
    d.set_item("phase", cmp.reconstruction.phase().values().to_vec())?;
    d.set_item("residual", cmp.residual.values().to_vec())?;
    d.set_item("max_interior_residual", cmp.max_interior_residual())?;
    d.set_item(
        "max_residual_near_dip",
        cmp.max_residual_near(cmp.exclusion.center, cmp.exclusion.halfwidth),
    )?;
    Ok(d)
}

/// Propagates a Gaussian pulse; `front_time=None` leaves it frontless.
#[pyfunction]
#[pyo3(signature = (config, band, carrier, sigma, window, samples, front_time=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_pulse<'py>(
    py: Python<'py>,
    config: PyRef<'_, SystemConfig>,
    band: PyRef<'_, FrequencyGrid>,
    carrier: f64,
    sigma: f64,
    window: f64,
    samples: usize,
    front_time: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = PulseSpec::new(carrier, sigma, window, samples).map_err(to_py)?;
    if let Some(t) = front_time {
        spec = spec.with_front(t).map_err(to_py)?;
    }
    let input = pulse::synth_pulse(&spec).map_err(to_py)?;
    let (system, grid) = (config.0, band.0);
    let r = py
        .detach(|| pulse::propagate(&input, &system, &grid))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("dt", r.dt)?;
    d.set_item("input_peak_time", r.input_peak_time)?;
    d.set_item("peak_time", r.peak_time)?;
    d.set_item("measured_delay", r.measured_delay())?;
    d.set_item("predicted_group_delay", r.predicted_group_delay)?;
    d.set_item("pre_front_energy_ratio", r.pre_front_energy_ratio)?;
    d.set_item("band_leakage", r.band_leakage)?;
    d.set_item("input_envelope", r.input_envelope)?;
    d.set_item("output_envelope", r.output_envelope)?;
    d.set_item("warnings", r.warnings)?;
    Ok(d)
}

#[pymodule]
fn dlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DlabError", m.py().get_type::<DlabError>())?;
    m.add("SPEED_OF_LIGHT", model::SPEED_OF_LIGHT)?;
    m.add_class::<IndexModel>()?;
    m.add_class::<SystemConfig>()?;
    m.add_class::<FrequencyGrid>()?;
    m.add_function(wrap_pyfunction!(transfer_h, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_from_phases, m)?)?;
    m.add_function(wrap_pyfunction!(magnitude_h, m)?)?;
    m.add_function(wrap_pyfunction!(absolute_phase, m)?)?;
    m.add_function(wrap_pyfunction!(group_delay, m)?)?;
    m.add_function(wrap_pyfunction!(half_waveplate_frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(classify_minimum_phase, m)?)?;
    m.add_function(wrap_pyfunction!(kk_re_from_im, m)?)?;
    m.add_function(wrap_pyfunction!(kk_im_from_re, m)?)?;
    m.add_function(wrap_pyfunction!(phase_from_magnitude, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_model_phase, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pulse, m)?)?;
    Ok(())
}
