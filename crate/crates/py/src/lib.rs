use std::path::PathBuf;

use facetflow::cahn_hoffman::{self, FacetReport};
use facetflow::profile::Profile;
use facetflow::scenario;
use facetflow::trajectory::Trajectory;
use facetflow::{dynamics, pde, selftest, Chi, DomainSpec, FacetSpec, FlowConfig, State};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: facetflow::Error) -> PyErr {
    match e {
        facetflow::Error::NotConverged { .. } | facetflow::Error::EnergyIncrease { .. } | facetflow::Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn chi(x: i32) -> PyResult<Chi> {
    match x {
        1 => Ok(Chi::Plus),
        -1 => Ok(Chi::Minus),
        _ => Err(PyValueError::new_err("chi must be +1 or -1")),
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> PyResult<String> {
    serde_json::to_string(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Radial computational domain: interval `[0, L]`, disc of radius `R` or annulus `r0 < r < R`.
#[pyclass(name = "Domain", frozen, from_py_object)]
#[derive(Clone)]
struct PyDomain(DomainSpec);

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(signature = (length, n = 200))]
    fn interval(length: f64, n: usize) -> PyResult<Self> {
        DomainSpec::interval(length, n).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (radius, n = 200))]
    fn ball(radius: f64, n: usize) -> PyResult<Self> {
        DomainSpec::ball(radius, n).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (r0, radius, n = 200))]
    fn annulus(r0: f64, radius: f64, n: usize) -> PyResult<Self> {
        DomainSpec::annulus(r0, radius, n).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("Domain({})", to_json(&self.0)?))
    }
}

/// Outcome of classifying one facet.
#[pyclass(name = "FacetReport", frozen, skip_from_py_object)]
struct PyFacetReport(FacetReport);

#[pymethods]
impl PyFacetReport {
    #[getter]
    fn case(&self) -> &'static str {
        self.0.case.as_str()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn mu(&self) -> Option<f64> {
        self.0.mu
    }

    #[getter]
    fn coherent(&self) -> bool {
        self.0.coherent
    }

    #[getter]
    fn detached(&self) -> bool {
        self.0.detached
    }

    #[getter]
    fn calibrable(&self) -> bool {
        self.0.calibrable
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "FacetReport(case={}, lam={}, mu={:?}, coherent={})",
            self.0.case.as_str(),
            self.0.lambda,
            self.0.mu,
            self.0.coherent
        )
    }
}

/// Sampled evolution: times, nodal values and per-step diagnostics.
#[pyclass(name = "Trajectory", frozen, skip_from_py_object)]
struct PyTrajectory(Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.0.states.iter().map(|s| s.u.clone()).collect()
    }

    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        self.0.states.iter().map(|s| s.v.clone()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(f64, f64)> {
        self.0.edges.iter().map(|e| (e[0], e[1])).collect()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.0.energy.clone()
    }

    #[getter]
    fn events(&self) -> PyResult<String> {
        to_json(&self.0.events)
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn flow(tau: f64, dt: f64, t_end: f64, eps: f64) -> PyResult<FlowConfig> {
    let cfg = FlowConfig {
        tau,
        eps,
        dt,
        t_end,
        ..FlowConfig::default()
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Classifies the facet `[inner, outer]` with sign `chi`.
#[pyfunction]
#[pyo3(signature = (domain, inner, outer, chi_sign, tau = 1.0, trace_matched = true))]
fn classify(domain: &PyDomain, inner: f64, outer: f64, chi_sign: i32, tau: f64, trace_matched: bool) -> PyResult<PyFacetReport> {
    let f = FacetSpec::new(inner, outer, chi(chi_sign)?);
    cahn_hoffman::classify_facet(&domain.0, &f, tau, trace_matched)
        .map(PyFacetReport)
        .map_err(err)
}

/// Boundary behaviour at t = 0 of a strictly monotone profile.
#[pyfunction]
#[pyo3(signature = (domain, chi_sign, tau = 1.0))]
fn onset(domain: &PyDomain, chi_sign: i32, tau: f64) -> PyResult<PyFacetReport> {
    cahn_hoffman::boundary_onset(&domain.0, chi(chi_sign)?, tau)
        .map(PyFacetReport)
        .map_err(err)
}

/// Minimizer `(λ, μ)` of `aλ² + bμ²/τ` on the line `aλ − bμ = c`.
#[pyfunction]
fn quad_min(a: f64, b: f64, c: f64, tau: f64) -> PyResult<(f64, f64)> {
    cahn_hoffman::quad_min(a, b, c, tau).map_err(err)
}

/// Exact facet tracking; `profile` is a JSON object such as `{"type": "ramp", "slope": 1, "intercept": 0}`.
#[pyfunction]
#[pyo3(signature = (domain, profile, dt, t_end, tau = 1.0))]
fn evolve_exact(domain: &PyDomain, profile: &str, dt: f64, t_end: f64, tau: f64) -> PyResult<PyTrajectory> {
    let p: Profile = serde_json::from_str(profile).map_err(|e| PyValueError::new_err(e.to_string()))?;
    dynamics::evolve_exact(&domain.0, &p, &flow(tau, dt, t_end, 0.0)?)
        .map(PyTrajectory)
        .map_err(err)
}

/// Implicit minimizing-movement flow from nodal values `u` (trace matched on Γ).
#[pyfunction]
#[pyo3(signature = (domain, u, dt, t_end, tau = 1.0, eps = 0.0))]
fn run_pde(domain: &PyDomain, u: Vec<f64>, dt: f64, t_end: f64, tau: f64, eps: f64) -> PyResult<PyTrajectory> {
    let s = State::with_matched_trace(&domain.0, u);
    pde::run_flow(&s, &flow(tau, dt, t_end, eps)?, &domain.0)
        .map(PyTrajectory)
        .map_err(err)
}

/// Runs a scenario given as JSON text; returns whether every check passed.
#[pyfunction]
#[pyo3(signature = (scenario_json, out_dir, seed = None))]
fn run_scenario(scenario_json: &str, out_dir: PathBuf, seed: Option<u64>) -> PyResult<bool> {
    let sc = scenario::parse_scenario(scenario_json, None).map_err(err)?;
    scenario::run(&sc, &out_dir, seed).map(|o| o.passed).map_err(err)
}

/// Runs the acceptance suite: one `(id, name, passed, detail)` tuple per criterion.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn run_selftest(seed: u64) -> Vec<(u8, String, bool, String)> {
    selftest::run_all(seed)
        .into_iter()
        .map(|r| (r.id, r.name, r.passed, r.detail))
        .collect()
}

#[pymodule(name = "facetflow")]
fn facetflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyFacetReport>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(onset, m)?)?;
    m.add_function(wrap_pyfunction!(quad_min, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(run_pde, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
