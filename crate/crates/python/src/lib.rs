//! Python bindings: curves, rate laws, scenarios and the solvers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ehflow_core as core;
use ehflow_core::multihop::Node;
use ehflow_core::scenario::{ScenarioFile, BUILTINS};
use ehflow_core::Term;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Unreachable { .. }
        | core::Error::ExceedsAchievable { .. }
        | core::Error::NonConvex { .. }
        | core::Error::LookAhead { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Cumulative, nondecreasing curve on `[0, horizon]`, built from terms.
///
/// Curves add: `Curve.poly(2.0, 100, power=2) + Curve.constant(2.0, 1)`.
#[pyclass(name = "Curve", frozen, from_py_object, module = "ehflow")]
#[derive(Clone)]
struct PyCurve(core::PiecewiseCurve);

impl PyCurve {
    fn build(terms: Vec<Term>, horizon: f64) -> PyResult<Self> {
        core::PiecewiseCurve::new(terms, horizon).map(Self).map_err(to_py)
    }
}

#[pymethods]
impl PyCurve {
    /// `coef * (t - shift)^power + offset`
    #[staticmethod]
    #[pyo3(signature = (horizon, coef, shift = 0.0, power = 1.0, offset = 0.0))]
    fn poly(horizon: f64, coef: f64, shift: f64, power: f64, offset: f64) -> PyResult<Self> {
        Self::build(vec![Term::poly(coef, shift, power, offset)], horizon)
    }

    /// `coef * exp(rate * t^power)`
    #[staticmethod]
    #[pyo3(signature = (horizon, coef, rate, power = 1.0))]
    fn exp(horizon: f64, coef: f64, rate: f64, power: f64) -> PyResult<Self> {
        Self::build(vec![Term::exp(coef, rate, power)], horizon)
    }

    #[staticmethod]
    fn constant(horizon: f64, value: f64) -> PyResult<Self> {
        Self::build(vec![Term::constant(value)], horizon)
    }

    #[staticmethod]
    fn step(horizon: f64, amount: f64, at: f64) -> PyResult<Self> {
        Self::build(vec![Term::step(amount, at)], horizon)
    }

    /// Everything available at `t = 0`.
    #[staticmethod]
    fn buffered(horizon: f64, amount: f64) -> PyResult<Self> {
        core::PiecewiseCurve::buffered(amount, horizon).map(Self).map_err(to_py)
    }

    /// Linear interpolation through `(t, value)` points, flat outside them.
    #[staticmethod]
    fn pwl(horizon: f64, points: Vec<(f64, f64)>) -> PyResult<Self> {
        Self::build(vec![Term::pwl(points.into_iter().map(|(t, v)| [t, v]).collect())], horizon)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        let terms = self.0.terms().iter().chain(other.0.terms()).cloned().collect();
        Self::build(terms, self.0.horizon().min(other.0.horizon()))
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.0.eval(t).map_err(to_py)
    }

    fn left_limit(&self, t: f64) -> PyResult<f64> {
        self.0.left_limit(t).map_err(to_py)
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.eval(t)
    }

    /// Staircase with `epochs` equal epochs.
    fn discretize(&self, epochs: usize) -> PyResult<Self> {
        self.0.discretize(epochs).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Curve({} terms on [0, {}])", self.0.terms().len(), self.0.horizon())
    }
}

#[pyclass(name = "RateFunction", frozen, from_py_object, module = "ehflow")]
#[derive(Clone)]
struct PyRate(core::RateFunction);

#[pymethods]
impl PyRate {
    /// `log2(1 + p)`
    #[staticmethod]
    fn shannon() -> Self {
        Self(core::RateFunction::shannon())
    }

    #[staticmethod]
    fn linear(gain: f64) -> Self {
        Self(core::RateFunction::linear(gain))
    }

    #[staticmethod]
    fn sqrt() -> Self {
        Self(core::RateFunction::sqrt())
    }

    /// Piecewise-linear law through the origin and `(power, rate)` points.
    #[staticmethod]
    fn custom(points: Vec<(f64, f64)>) -> PyResult<Self> {
        core::RateFunction::custom(points.into_iter().map(|(p, r)| [p, r]).collect())
            .map(Self)
            .map_err(to_py)
    }

    fn rate(&self, power: f64) -> f64 {
        self.0.rate(power)
    }

    fn inverse(&self, rate: f64) -> f64 {
        self.0.inverse(rate)
    }

    fn __call__(&self, power: f64) -> f64 {
        self.0.rate(power)
    }

    /// Which of the required properties the law satisfies.
    fn check(&self) -> Vec<(&'static str, bool)> {
        let r = core::check_rate_law(&self.0);
        vec![
            ("zero_at_origin", r.zero_at_origin),
            ("increasing", r.increasing),
            ("concave", r.concave),
            ("inverse_consistent", r.inverse_consistent),
            ("unbounded", r.unbounded),
            ("sublinear", r.sublinear),
        ]
    }

    fn __repr__(&self) -> String {
        format!("RateFunction({})", self.0.label())
    }
}

/// A chain of transmitters from the source to the last relay.
#[pyclass(name = "Scenario", frozen, skip_from_py_object, module = "ehflow")]
#[derive(Clone)]
struct PyScenario {
    inner: core::Scenario,
    epsilon: f64,
}

impl PyScenario {
    fn from_file(file: &ScenarioFile) -> PyResult<Self> {
        Ok(Self {
            inner: file.build().map_err(to_py)?,
            epsilon: file.epsilon(),
        })
    }
}

#[pymethods]
impl PyScenario {
    /// `nodes` is a list of `(name, energy_curve, rate_function)`, source first.
    #[new]
    #[pyo3(signature = (nodes, arrival, deadline, cells = core::curves::DEFAULT_CELLS))]
    fn new(nodes: Vec<(String, PyCurve, PyRate)>, arrival: PyCurve, deadline: f64, cells: usize) -> PyResult<Self> {
        let nodes = nodes.into_iter().map(|(name, e, r)| Node::new(name, e.0, r.0)).collect();
        let inner = core::Scenario::new(nodes, arrival.0, deadline).map_err(to_py)?;
        Ok(Self {
            inner: inner.with_cells(cells),
            epsilon: 1e-5 * deadline,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Self::from_file(&ScenarioFile::parse(text).map_err(to_py)?)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Self::from_file(&ScenarioFile::load(path).map_err(to_py)?)
    }

    /// One of `ex1`, `ex2`, `ex3`, `cubic`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let file = core::builtin(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown built-in `{name}` (known: {})", BUILTINS.join(", "))))?;
        Self::from_file(&file)
    }

    #[getter]
    fn deadline(&self) -> f64 {
        self.inner.deadline
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells
    }

    #[getter]
    fn hops(&self) -> usize {
        self.inner.hops()
    }

    /// Default online look-ahead slack.
    #[getter]
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[getter]
    fn node_names(&self) -> Vec<String> {
        self.inner.nodes.iter().map(|n| n.name.clone()).collect()
    }

    fn with_cells(&self, cells: usize) -> Self {
        Self {
            inner: self.inner.clone().with_cells(cells),
            epsilon: self.epsilon,
        }
    }

    fn with_deadline(&self, deadline: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_deadline(deadline).map_err(to_py)?,
            epsilon: self.epsilon,
        })
    }

    fn discretized(&self, epochs: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.discretized(epochs).map_err(to_py)?,
            epsilon: self.epsilon,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(hops={}, deadline={}, cells={})",
            self.inner.hops(),
            self.inner.deadline,
            self.inner.cells
        )
    }
}

#[pyclass(name = "Schedule", frozen, module = "ehflow")]
struct PySchedule(core::Schedule);

#[pymethods]
impl PySchedule {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    /// One value per grid cell.
    #[getter]
    fn power(&self) -> Vec<f64> {
        self.0.power.clone()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.0.energy.clone()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.0.data.clone()
    }

    #[getter]
    fn delivered(&self) -> f64 {
        self.0.delivered()
    }

    #[getter]
    fn energy_used(&self) -> f64 {
        self.0.energy_used()
    }

    fn __repr__(&self) -> String {
        format!(
            "Schedule(cells={}, delivered={}, energy_used={})",
            self.0.cells(),
            self.0.delivered(),
            self.0.energy_used()
        )
    }
}

fn schedules(list: &[core::Schedule]) -> Vec<PySchedule> {
    list.iter().cloned().map(PySchedule).collect()
}

#[pyclass(name = "Solution", frozen, module = "ehflow")]
struct PySolution(core::MultiHopSolution);

#[pymethods]
impl PySolution {
    #[getter]
    fn delivered(&self) -> f64 {
        self.0.delivered
    }

    #[getter]
    fn schedules(&self) -> Vec<PySchedule> {
        schedules(&self.0.schedules)
    }

    /// Throughput-optimal schedules before the energy pass.
    #[getter]
    fn forward(&self) -> Vec<PySchedule> {
        schedules(&self.0.forward)
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.energies()
    }

    /// Where each node leaves its optimal curve for the tangent line.
    #[getter]
    fn t1(&self) -> Vec<Option<f64>> {
        self.0.tangents.iter().map(|t| t.map(|t| t.touch)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Solution(delivered={}, energies={:?})", self.0.delivered, self.0.energies())
    }
}

#[pyclass(name = "OnlineRun", frozen, module = "ehflow")]
struct PyOnlineRun(core::OnlineRun);

#[pymethods]
impl PyOnlineRun {
    #[getter]
    fn delivered(&self) -> f64 {
        self.0.delivered
    }

    #[getter]
    fn variant(&self) -> String {
        self.0.variant.to_string()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn schedules(&self) -> Vec<PySchedule> {
        schedules(&self.0.schedules)
    }

    /// Times where each node's active relay branch changed.
    #[getter]
    fn switches(&self) -> Vec<Vec<f64>> {
        self.0.switches.clone()
    }

    fn __repr__(&self) -> String {
        format!("OnlineRun(variant={}, delivered={})", self.0.variant, self.0.delivered)
    }
}

/// Maximum data through the chain by the deadline, optionally with the energy pass.
#[pyfunction]
#[pyo3(signature = (scenario, minimize_energy = false))]
fn solve_throughput(py: Python<'_>, scenario: &PyScenario, minimize_energy: bool) -> PyResult<PySolution> {
    let sc = scenario.inner.clone();
    py.detach(move || core::solve_throughput(&sc, minimize_energy))
        .map(PySolution)
        .map_err(to_py)
}

/// Single-link optimum under energy and data arrival curves.
#[pyfunction]
#[pyo3(signature = (energy, data, rate, deadline, cells = core::curves::DEFAULT_CELLS))]
fn solve_p2p(energy: &PyCurve, data: &PyCurve, rate: &PyRate, deadline: f64, cells: usize) -> PyResult<PySchedule> {
    core::p2p::solve_p2p_with_cells(&energy.0, &data.0, &rate.0, deadline, cells)
        .map(PySchedule)
        .map_err(to_py)
}

/// Causal policy; `variant` is `"proposed"` or `"benchmark"`.
#[pyfunction]
#[pyo3(signature = (scenario, epsilon = None, variant = "proposed"))]
fn run_online(scenario: &PyScenario, epsilon: Option<f64>, variant: &str) -> PyResult<PyOnlineRun> {
    let variant: core::Variant = variant.parse().map_err(to_py)?;
    core::run_online(&scenario.inner, epsilon.unwrap_or(scenario.epsilon), variant)
        .map(PyOnlineRun)
        .map_err(to_py)
}

#[pyfunction]
fn throughput_at(scenario: &PyScenario, t: f64) -> PyResult<f64> {
    core::throughput_at(&scenario.inner, t).map_err(to_py)
}

/// Shortest deadline delivering `target_bits`, searched over `(0, t_max]`.
/// Returns `(t_off, solution)`.
#[pyfunction]
fn min_completion_time(py: Python<'_>, scenario: &PyScenario, target_bits: f64, t_max: f64) -> PyResult<(f64, PySolution)> {
    let sc = scenario.inner.clone();
    let out = py
        .detach(move || core::min_completion_time(&sc, &core::DeadlineQuery::new(target_bits, t_max)))
        .map_err(to_py)?;
    Ok((out.t_off, PySolution(out.solution)))
}

#[pymodule]
fn ehflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyRate>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyOnlineRun>()?;
    m.add_function(wrap_pyfunction!(solve_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(solve_p2p, m)?)?;
    m.add_function(wrap_pyfunction!(run_online, m)?)?;
    m.add_function(wrap_pyfunction!(throughput_at, m)?)?;
    m.add_function(wrap_pyfunction!(min_completion_time, m)?)?;
    m.add("BUILTINS", BUILTINS.to_vec())?;
    Ok(())
}
