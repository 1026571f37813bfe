//! Python bindings: load scenarios, simulate, and run the certificate
//! pipelines. Structured results are returned as plain dicts and lists.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use ::invlab as core;
use core::channels::ControlChannel;
use core::document::{load_validate, parse_validate};
use core::pipeline::{run_certify, threshold_certificate, Check};
use core::report::{build_report, trajectory_csv};
use core::simulator::{invariance_audit, simulate, theorem1_harness, Trajectory};
use core::supercritical::a2_margin;

create_exception!(invlab, InvlabError, PyException);

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Config(_) | core::Error::Dimension { .. } | core::Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => InvlabError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| InvlabError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Scenario", module = "invlab")]
struct PyScenario {
    inner: core::Scenario,
}

impl PyScenario {
    fn run(&self, policy: Option<&str>, horizon: Option<f64>, dt: Option<f64>) -> PyResult<Trajectory> {
        let sc = &self.inner;
        let p = match policy {
            Some(id) => sc.policy(id).map_err(to_py)?,
            None => sc.default_policy(),
        };
        simulate(
            sc,
            p,
            &sc.initial_state,
            horizon.unwrap_or(sc.numerics.horizon),
            dt.unwrap_or(sc.numerics.dt),
        )
        .map_err(to_py)
    }

    fn report<'py>(&self, py: Python<'py>, certs: Vec<core::Certificate>) -> PyResult<Bound<'py, PyAny>> {
        let report = build_report(Some(&self.inner.name), Some(self.inner.numerics.seed), certs).map_err(to_py)?;
        json_to_py(py, &report)
    }
}

#[pymethods]
impl PyScenario {
    /// Loads and validates a scenario file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let doc = load_validate(&path).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: doc.build().map_err(to_py)?,
        })
    }

    /// Parses scenario text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let doc = parse_validate(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: doc.build().map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.numerics.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.numerics.seed = seed;
    }

    #[getter]
    fn policies(&self) -> Vec<String> {
        self.inner.policies.iter().map(|p| p.id().to_string()).collect()
    }

    /// Capability level at time `t`.
    fn kappa(&self, t: f64) -> PyResult<f64> {
        self.inner.kappa(t).map_err(to_py)
    }

    /// Runs one trajectory and returns its columns, events and the
    /// invariance verdict.
    #[pyo3(signature = (policy=None, horizon=None, dt=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        policy: Option<&str>,
        horizon: Option<f64>,
        dt: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let traj = self.run(policy, horizon, dt)?;
        let audit = invariance_audit(&traj).map_err(to_py)?;
        let value = serde_json::json!({
            "policy": traj.policy_id,
            "t": traj.samples.iter().map(|s| s.t).collect::<Vec<_>>(),
            "x": traj.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>(),
            "kappa": traj.samples.iter().map(|s| s.kappa).collect::<Vec<_>>(),
            "u": traj.samples.iter().map(|s| s.u.clone()).collect::<Vec<_>>(),
            "g": traj.samples.iter().map(|s| s.g).collect::<Vec<_>>(),
            "events": traj.events,
            "terminated": traj.terminated,
            "invariant": audit.invariant,
            "min_margin": audit.min_margin,
            "violation_time": audit.violation_time,
        });
        json_to_py(py, &value)
    }

    #[pyo3(signature = (policy=None))]
    fn trajectory_csv(&self, policy: Option<&str>) -> PyResult<String> {
        trajectory_csv(&self.run(policy, None, None)?).map_err(to_py)
    }

    /// Threshold κ*, T_κ and regime as a report dict.
    fn threshold<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let c = threshold_certificate(&self.inner).map_err(to_py)?;
        self.report(py, vec![c])
    }

    #[pyo3(signature = (checks=None))]
    fn certify<'py>(&self, py: Python<'py>, checks: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
        let checks = match checks {
            None => Check::ALL.to_vec(),
            Some(list) => list.iter().map(|s| s.parse()).collect::<core::Result<_>>().map_err(to_py)?,
        };
        let certs = run_certify(&self.inner, &checks).map_err(to_py)?;
        self.report(py, certs)
    }

    fn harness<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let r = py
            .detach(|| theorem1_harness(&self.inner, &self.inner.policies))
            .map_err(to_py)?;
        self.report(py, r.certificates())
    }

    fn requirements<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let certs = core::intrinsic::requirements_audit(&self.inner).map_err(to_py)?;
        self.report(py, certs)
    }

    /// Boundary gap at `x_b` for capability `kappa`.
    fn a2_margin(&self, x_b: Vec<f64>, kappa: f64) -> PyResult<f64> {
        let db = self.inner.drift_bound().map_err(to_py)?;
        let m = a2_margin(&self.inner, &db, &DVector::from_vec(x_b), kappa).map_err(to_py)?;
        Ok(m.margin)
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name={:?}, dim={})", self.inner.name, self.inner.dim())
    }
}

/// Control minimizing `⟨B·u, n⟩` subject to `‖B·u‖ ≤ u_max`.
#[pyfunction]
fn restoring_optimal_control(b: Vec<Vec<f64>>, n: Vec<f64>, u_max: f64) -> PyResult<Vec<f64>> {
    let rows = b.len();
    let cols = b.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || b.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("b must be a non-empty list of equal-length rows"));
    }
    let ch = ControlChannel::new(DMatrix::from_fn(rows, cols, |i, j| b[i][j])).map_err(to_py)?;
    let u = core::policies::restoring_optimal_control(&ch, &DVector::from_vec(n), u_max).map_err(to_py)?;
    Ok(u.as_slice().to_vec())
}

#[pymodule]
fn invlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(restoring_optimal_control, m)?)?;
    m.add("InvlabError", m.py().get_type::<InvlabError>())?;
    Ok(())
}
