//! Python bindings for `spinheat`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use spinheat::dynamics::{integrate as integrate_core, Sample};
use spinheat::secular::{flux_bounds as flux_bounds_core, SecularSolution};
use spinheat::{bath, spinflip, Error, IntegratorConfig, Scheme};

create_exception!(spinheat_py, CapabilityError, PyException);
create_exception!(spinheat_py, IntegrationError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capability(_) => CapabilityError::new_err(e.to_string()),
        Error::Integration { .. } | Error::Integrity { .. } | Error::Numerical { .. } => {
            IntegrationError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ChainParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyChainParams(spinheat::ChainParams);

#[pymethods]
impl PyChainParams {
    #[new]
    fn new(n: usize, j: f64, h: f64) -> PyResult<Self> {
        spinheat::ChainParams::new(n, j, h).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn j(&self) -> f64 {
        self.0.j
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    /// Mode frequencies `ω_1..ω_N`.
    fn omegas(&self) -> Vec<f64> {
        self.0.omegas()
    }

    fn __repr__(&self) -> String {
        format!("ChainParams(n={}, j={}, h={})", self.0.n, self.0.j, self.0.h)
    }
}

#[pyclass(name = "BathParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyBathParams(spinheat::BathParams);

#[pymethods]
impl PyBathParams {
    #[new]
    #[pyo3(signature = (lam, beta, sigma, n_trunc = 2))]
    fn new(lam: f64, beta: f64, sigma: f64, n_trunc: usize) -> PyResult<Self> {
        spinheat::BathParams::new(lam, beta, sigma, n_trunc).map(Self).map_err(to_py)
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn n_trunc(&self) -> usize {
        self.0.n_trunc
    }

    /// Exact Gaussian spectral density `γ(ω)`.
    fn spectral_density(&self, omega: f64) -> f64 {
        bath::spectral_density(&self.0, omega)
    }

    fn truncated_spectral_density(&self, omega: f64) -> f64 {
        bath::truncated_spectral_density(&self.0, omega)
    }

    /// Finite-time spectral function `Γ_t(ω)`.
    fn incomplete_spectral(&self, omega: f64, t: f64) -> Complex64 {
        bath::incomplete_spectral(&self.0, omega, t)
    }

    fn markov_spectral(&self, omega: f64) -> Complex64 {
        bath::markov_spectral(&self.0, omega)
    }

    fn __repr__(&self) -> String {
        let b = &self.0;
        format!("BathParams(lam={}, beta={}, sigma={}, n_trunc={})", b.lambda, b.beta, b.sigma, b.n_trunc)
    }
}

/// One recorded time point of an integrated trajectory.
#[pyclass(name = "Sample", frozen, get_all)]
struct PySample {
    t: f64,
    flux: f64,
    magnetization: Vec<f64>,
    energy: f64,
    trace_error: f64,
    hermiticity_defect: f64,
    min_eigenvalue: f64,
}

impl From<Sample> for PySample {
    fn from(s: Sample) -> Self {
        PySample {
            t: s.t,
            flux: s.flux,
            magnetization: s.magnetization,
            energy: s.energy,
            trace_error: s.trace_error,
            hermiticity_defect: s.hermiticity_defect,
            min_eigenvalue: s.min_eigenvalue,
        }
    }
}

#[pymethods]
impl PySample {
    fn __repr__(&self) -> String {
        format!("Sample(t={}, flux={:e}, energy={})", self.t, self.flux, self.energy)
    }
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    match s {
        "concatenation" => Ok(Scheme::Concatenation),
        "secular-delta" => Ok(Scheme::SecularDelta),
        "reference" => Ok(Scheme::Reference),
        other => Err(PyValueError::new_err(format!(
            "unknown scheme `{other}` (expected concatenation, secular-delta or reference)"
        ))),
    }
}

/// Integrate the master equation from a thermal start and return the samples.
#[pyfunction]
#[pyo3(signature = (chain, bath, t_max, scheme = "concatenation", beta_sys0 = 0.0, sample_dt = 0.1, t_switch = None))]
#[allow(clippy::too_many_arguments)]
fn integrate(
    py: Python<'_>,
    chain: &PyChainParams,
    bath: &PyBathParams,
    t_max: f64,
    scheme: &str,
    beta_sys0: f64,
    sample_dt: f64,
    t_switch: Option<f64>,
) -> PyResult<Vec<PySample>> {
    let scheme = parse_scheme(scheme)?;
    let mut cfg = IntegratorConfig::new(t_max, bath.0.sigma);
    cfg.sample_dt = sample_dt;
    if let Some(ts) = t_switch {
        cfg.t_switch = ts.min(t_max);
    }
    let (p, b) = (chain.0, bath.0);
    let traj = py
        .detach(move || {
            let rho0 = spinheat::DensityMatrix::thermal(&p, beta_sys0);
            integrate_core(&p, &b, &rho0, &cfg, scheme)
        })
        .map_err(|f| to_py(f.error))?;
    Ok(traj.samples.into_iter().map(PySample::from).collect())
}

/// Closed-form secular flux `J(t)` from a thermal start at `beta_sys0`.
#[pyfunction]
#[pyo3(signature = (chain, bath, times, beta_sys0 = 0.0))]
fn secular_flux(chain: &PyChainParams, bath: &PyBathParams, times: Vec<f64>, beta_sys0: f64) -> PyResult<Vec<f64>> {
    let sol = SecularSolution::thermal_start(&chain.0, &bath.0, beta_sys0).map_err(to_py)?;
    Ok(times.iter().map(|&t| sol.flux(t)).collect())
}

/// Lower and upper envelopes of `|J(t)/J(0)|`.
#[pyfunction]
fn flux_bounds(chain: &PyChainParams, bath: &PyBathParams, t: f64) -> (f64, f64) {
    flux_bounds_core(t, &chain.0, &bath.0)
}

#[pyfunction]
fn thermal_response(chain: &PyChainParams, beta: f64, n: usize, t: f64) -> PyResult<f64> {
    spinflip::thermal_response(&chain.0, beta, n, t).map_err(to_py)
}

/// Response in an eigenstate given by its occupation bits (mode 1 first).
#[pyfunction]
fn eigenstate_response(chain: &PyChainParams, bits: Vec<u8>, n: usize, t: f64) -> PyResult<f64> {
    let k = spinheat::OccupationConfig::from_bits(&bits).map_err(to_py)?;
    spinflip::eigenstate_response(&chain.0, &k, n, t).map_err(to_py)
}

#[pyfunction]
fn thermo_integral_response(j: f64, h: f64, beta: f64, n: usize, t: f64) -> PyResult<f64> {
    spinflip::thermo_integral_response(j, h, beta, n, t).map_err(to_py)
}

#[pyfunction]
fn high_temp_response(j: f64, h: f64, beta: f64, n: usize, t: f64) -> PyResult<f64> {
    spinflip::high_temp_response(j, h, beta, n, t).map_err(to_py)
}

#[pyfunction]
fn high_temp_normalized(j: f64, n: usize, t: f64) -> PyResult<f64> {
    spinflip::high_temp_normalized(j, n, t).map_err(to_py)
}

#[pyfunction]
fn low_temp_response(j: f64, h: f64, n: usize, t: f64) -> PyResult<f64> {
    spinflip::low_temp_response(j, h, n, t).map_err(to_py)
}

#[pymodule]
fn spinheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChainParams>()?;
    m.add_class::<PyBathParams>()?;
    m.add_class::<PySample>()?;
    m.add("CapabilityError", m.py().get_type::<CapabilityError>())?;
    m.add("IntegrationError", m.py().get_type::<IntegrationError>())?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(secular_flux, m)?)?;
    m.add_function(wrap_pyfunction!(flux_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_response, m)?)?;
    m.add_function(wrap_pyfunction!(eigenstate_response, m)?)?;
    m.add_function(wrap_pyfunction!(thermo_integral_response, m)?)?;
    m.add_function(wrap_pyfunction!(high_temp_response, m)?)?;
    m.add_function(wrap_pyfunction!(high_temp_normalized, m)?)?;
    m.add_function(wrap_pyfunction!(low_temp_response, m)?)?;
    Ok(())
}
