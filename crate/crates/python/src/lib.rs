//! Python bindings: models, constraint sets, admissible sets, governors and
//! the scenario engine. Vectors are lists of floats, matrices lists of rows.

use std::sync::{Arc, Mutex};

use prgov::governor::{self, CommandGovernor, MultiHorizonGovernor, PreviewGovernor, StepInput};
use prgov::mas::{self, PreviewAMatrix};
use prgov::numerics::{matrix_from_rows, matrix_to_rows, DenseMatrix, DenseVector};
use prgov::scenario::{self as sc, GovernorConfig, RunOptions};
use prgov::sysmod::{lift_input, StateSpaceModel};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(_prgov, PrgovError, PyValueError, "Error raised by the governor library.");

fn err(e: prgov::Error) -> PyErr {
    PrgovError::new_err(e.to_string())
}

fn vec_of(v: Vec<f64>) -> DenseVector {
    DenseVector::from_vec(v)
}

fn mat_of(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    matrix_from_rows(&rows).map_err(err)
}

fn list_of(v: &DenseVector) -> Vec<f64> {
    v.iter().copied().collect()
}

fn json_loads<'py>(py: Python<'py>, s: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (s,))
}

fn json_dumps(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(s);
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

/// Discrete-time state-space model `x⁺ = A x + B u`, `y = C x + D u`.
#[pyclass(name = "Model", module = "prgov", frozen)]
struct PyModel {
    inner: StateSpaceModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Vec<Vec<f64>>, sample_time: f64) -> PyResult<Self> {
        let inner = StateSpaceModel::discrete(mat_of(a)?, mat_of(b)?, mat_of(c)?, mat_of(d)?, sample_time).map_err(err)?;
        Ok(PyModel { inner })
    }

    /// Closed-loop one-link arm.
    #[staticmethod]
    fn one_link() -> PyResult<Self> {
        Ok(PyModel { inner: sc::models::one_link_closed_loop().map_err(err)? })
    }

    /// Closed-loop two-link arm.
    #[staticmethod]
    fn two_link() -> PyResult<Self> {
        Ok(PyModel { inner: sc::models::two_link_closed_loop().map_err(err)? })
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    #[getter]
    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.a)
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.inner.b)
    }

    fn spectral_radius(&self) -> PyResult<f64> {
        self.inner.spectral_radius().map_err(err)
    }

    fn dc_gain(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_to_rows(&self.inner.dc_gain().map_err(err)?))
    }

    /// One step; returns `(x_next, y)`.
    fn step(&self, x: Vec<f64>, u: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (xn, y) = self.inner.step(&vec_of(x), &vec_of(u)).map_err(err)?;
        Ok((list_of(&xn), list_of(&y)))
    }

    fn __repr__(&self) -> String {
        format!("Model(n_states={}, n_inputs={}, n_outputs={})", self.n_states(), self.n_inputs(), self.n_outputs())
    }
}

/// Polytope `{z : H z <= h}`.
#[pyclass(name = "Polytope", module = "prgov", frozen)]
struct PyPolytope {
    inner: prgov::polytope::Polytope,
}

#[pymethods]
impl PyPolytope {
    #[new]
    fn new(hmat: Vec<Vec<f64>>, h: Vec<f64>) -> PyResult<Self> {
        Ok(PyPolytope { inner: prgov::polytope::Polytope::new(mat_of(hmat)?, vec_of(h)).map_err(err)? })
    }

    /// Box `|z_i| <= bounds[i]`.
    #[staticmethod]
    fn symmetric_box(bounds: Vec<f64>) -> PyResult<Self> {
        Ok(PyPolytope { inner: prgov::polytope::Polytope::symmetric_box(&bounds).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    fn contains(&self, z: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.contains(&vec_of(z)).map_err(err)?.inside)
    }
}

/// Maximal admissible set over `(x, v)`.
#[pyclass(name = "AdmissibleSet", module = "prgov", frozen)]
struct PyAdmissibleSet {
    inner: Arc<mas::AdmissibleSet>,
}

impl PyAdmissibleSet {
    fn wrap(set: prgov::Result<mas::AdmissibleSet>) -> PyResult<Self> {
        Ok(PyAdmissibleSet { inner: Arc::new(set.map_err(err)?) })
    }
}

#[pymethods]
impl PyAdmissibleSet {
    /// Constant-command set used by the scalar governor.
    #[staticmethod]
    #[pyo3(signature = (model, constraints, epsilon = 0.01, t_max = 500))]
    fn standard(model: &PyModel, constraints: &PyPolytope, epsilon: f64, t_max: usize) -> PyResult<Self> {
        Self::wrap(mas::build_mas(&model.inner, &constraints.inner, epsilon, t_max))
    }

    /// Lifted preview set for a single-input model with horizon `n`.
    #[staticmethod]
    #[pyo3(signature = (model, horizon, constraints, epsilon = 0.01, t_max = 500))]
    fn lifted(model: &PyModel, horizon: usize, constraints: &PyPolytope, epsilon: f64, t_max: usize) -> PyResult<Self> {
        let lifted = lift_input(&model.inner, horizon).map_err(err)?;
        Self::wrap(mas::build_lifted_mas(&lifted, &PreviewAMatrix::delay(horizon), &constraints.inner, epsilon, t_max))
    }

    /// Lifted set with stochastic-mixing preview dynamics.
    #[staticmethod]
    #[pyo3(signature = (model, lambdas, constraints, epsilon = 0.01, t_max = 500))]
    fn lambda_lifted(model: &PyModel, lambdas: Vec<f64>, constraints: &PyPolytope, epsilon: f64, t_max: usize) -> PyResult<Self> {
        let a_bar = PreviewAMatrix::lambda(&lambdas).map_err(err)?;
        let lifted = lift_input(&model.inner, lambdas.len()).map_err(err)?;
        Self::wrap(mas::build_lifted_mas(&lifted, &a_bar, &constraints.inner, epsilon, t_max))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::wrap(mas::AdmissibleSet::from_json(text))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant.as_str()
    }

    #[getter]
    fn t_star(&self) -> usize {
        self.inner.t_star
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn horizons(&self) -> Vec<usize> {
        self.inner.a_bar.horizons.clone()
    }

    fn contains(&self, x: Vec<f64>, v: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&vec_of(x), &vec_of(v)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("AdmissibleSet(variant={:?}, t_star={}, n_rows={})", self.variant(), self.t_star(), self.n_rows())
    }
}

/// Result of one governor step.
#[pyclass(name = "StepOutput", module = "prgov", frozen, get_all)]
struct PyStepOutput {
    v: Vec<f64>,
    v_n: Vec<f64>,
    kappa: f64,
    kappas: Vec<f64>,
    selected: Option<usize>,
}

#[pymethods]
impl PyStepOutput {
    fn __repr__(&self) -> String {
        format!("StepOutput(v={:?}, kappa={})", self.v, self.kappa)
    }
}

/// An online governor. Build with one of the static constructors.
#[pyclass(name = "Governor", module = "prgov")]
struct PyGovernor {
    inner: Mutex<Box<dyn governor::Governor + Send>>,
}

impl PyGovernor {
    fn wrap<G: governor::Governor + Send + 'static>(g: prgov::Result<G>) -> PyResult<Self> {
        Ok(PyGovernor { inner: Mutex::new(Box::new(g.map_err(err)?)) })
    }
}

#[pymethods]
impl PyGovernor {
    /// Scalar or preview governor on a standard, lifted or λ-lifted set.
    #[staticmethod]
    fn preview(set: &PyAdmissibleSet, x0: Vec<f64>, r0: Vec<f64>) -> PyResult<Self> {
        Self::wrap(PreviewGovernor::new(set.inner.clone(), &vec_of(x0), &vec_of(r0)))
    }

    /// Multi-horizon fusion over `horizons` sharing a lifted set of the largest horizon.
    #[staticmethod]
    fn multi_n(set: &PyAdmissibleSet, horizons: Vec<usize>, x0: Vec<f64>, r0: Vec<f64>) -> PyResult<Self> {
        Self::wrap(MultiHorizonGovernor::new(set.inner.clone(), &horizons, &vec_of(x0), &vec_of(r0)))
    }

    /// Quadratic command governor.
    #[staticmethod]
    #[pyo3(signature = (set, x0, r0, weight = None))]
    fn command(set: &PyAdmissibleSet, x0: Vec<f64>, r0: Vec<f64>, weight: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let weight = weight.map(mat_of).transpose()?;
        Self::wrap(CommandGovernor::new(set.inner.clone(), weight, &vec_of(x0), &vec_of(r0)))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.lock().expect("governor lock").kind().as_str()
    }

    #[getter]
    fn horizons(&self) -> Vec<usize> {
        self.inner.lock().expect("governor lock").horizons()
    }

    /// One step with state `x` and lifted reference `r`.
    fn step(&self, py: Python<'_>, x: Vec<f64>, r: Vec<f64>) -> PyResult<PyStepOutput> {
        let (x, r) = (vec_of(x), vec_of(r));
        let out = py.detach(|| self.inner.lock().expect("governor lock").step(&StepInput::new(&x, &r))).map_err(err)?;
        Ok(PyStepOutput { v: list_of(&out.v), v_n: list_of(&out.v_n), kappa: out.kappa, kappas: out.kappas, selected: out.selected })
    }
}

/// Per-step records and summary of a scenario run.
#[pyclass(name = "ScenarioResult", module = "prgov", frozen)]
struct PyScenarioResult {
    inner: sc::ScenarioResult,
}

#[pymethods]
impl PyScenarioResult {
    #[getter]
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &self.inner.summary_json().map_err(err)?)
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.t).collect()
    }

    #[getter]
    fn r(&self) -> Vec<Vec<f64>> {
        self.inner.records.iter().map(|r| r.r.clone()).collect()
    }

    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        self.inner.records.iter().map(|r| r.v.clone()).collect()
    }

    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        self.inner.records.iter().map(|r| r.y.clone()).collect()
    }

    #[getter]
    fn kappa(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.kappa).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

/// Explicit κ from `a = H_v d` and slack `b`.
#[pyfunction]
fn explicit_kappa(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err("a and b must have the same length"));
    }
    Ok(governor::explicit_kappa(&vec_of(a), &vec_of(b)))
}

#[pyfunction]
fn scenario_names() -> Vec<String> {
    sc::scenario_names()
}

/// Scenario definition as a dict.
#[pyfunction]
fn scenario<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    json_loads(py, &sc::find_scenario(name).map_err(err)?.to_json().map_err(err)?)
}

fn governor_config(obj: &Bound<'_, PyAny>) -> PyResult<GovernorConfig> {
    serde_json::from_str(&json_dumps(obj)?).map_err(|e| PyValueError::new_err(format!("bad governor config: {e}")))
}

/// Runs a registry scenario (by name) or a scenario dict with a governor
/// config such as `{"kind": "prg", "horizon": 25}`.
#[pyfunction]
#[pyo3(signature = (scenario, governor, seed = 0, timing = false))]
fn run_scenario(py: Python<'_>, scenario: &Bound<'_, PyAny>, governor: &Bound<'_, PyAny>, seed: u64, timing: bool) -> PyResult<PyScenarioResult> {
    let scen = match scenario.extract::<String>() {
        Ok(name) => sc::find_scenario(&name).map_err(err)?,
        Err(_) => sc::Scenario::from_json(&json_dumps(scenario)?).map_err(err)?,
    };
    let cfg = governor_config(governor)?;
    let opts = RunOptions { seed, timing, ..Default::default() };
    let inner = py.detach(|| sc::run_scenario(&scen, &cfg, &opts)).map_err(err)?;
    Ok(PyScenarioResult { inner })
}

/// Mean and max per-step latency per governor config.
#[pyfunction]
#[pyo3(signature = (scenario, governors, repeats = 10, seed = 0))]
fn timing_comparison<'py>(
    py: Python<'py>,
    scenario: &str,
    governors: Vec<Bound<'py, PyAny>>,
    repeats: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let scen = sc::find_scenario(scenario).map_err(err)?;
    let configs = governors.iter().map(governor_config).collect::<PyResult<Vec<_>>>()?;
    let rows = py.detach(|| sc::run_timing_comparison(&scen, &configs, repeats, seed)).map_err(err)?;
    json_loads(py, &serde_json::to_string(&rows).map_err(|e| PyValueError::new_err(e.to_string()))?)
}

#[pymodule]
fn _prgov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("PrgovError", py.get_type::<PrgovError>())?;
    m.add("LAMBDA_PRESET", sc::LAMBDA_PRESET.to_vec())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPolytope>()?;
    m.add_class::<PyAdmissibleSet>()?;
    m.add_class::<PyStepOutput>()?;
    m.add_class::<PyGovernor>()?;
    m.add_class::<PyScenarioResult>()?;
    m.add_function(wrap_pyfunction!(explicit_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(timing_comparison, m)?)?;
    let all = [
        "PrgovError", "LAMBDA_PRESET", "Model", "Polytope", "AdmissibleSet", "StepOutput", "Governor", "ScenarioResult",
        "explicit_kappa", "scenario_names", "scenario", "run_scenario", "timing_comparison",
    ];
    m.add("__all__", all.to_vec())?;
    Ok(())
}
