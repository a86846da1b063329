//! Python bindings: scenarios, runs, bounds and the graph utilities.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use tether_core::double::solve_gains as core_solve_gains;
use tether_core::export::{bounds_json, trace_csv, triggers_csv, DEFAULT_PRECISION};
use tether_core::graph::{algebraic_connectivity as core_connectivity, laplacian as core_laplacian};
use tether_core::{compute_bounds, parse_scenario, Error, Graph, RunOutput, ScenarioConfig};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Run { .. } | Error::RootFinding { .. } | Error::MarginViolation { .. } | Error::StaleKnowledge { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn graph_from(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Graph> {
    let zero_based = edges
        .into_iter()
        .map(|(i, j)| match (i.checked_sub(1), j.checked_sub(1)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(PyValueError::new_err("node indices start at 1")),
        })
        .collect::<PyResult<Vec<_>>>()?;
    Graph::new(n, &zero_based).map_err(|e| to_py_err(e.one_based()))
}

/// A validated scenario.
#[pyclass(module = "tether", frozen)]
struct Scenario {
    config: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Parses scenario text in the `.cfg` (TOML) format.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Scenario {
            config: parse_scenario(text).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Scenario {
            config: tether_core::load_scenario(path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn mode(&self) -> String {
        self.config.kind().to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.config.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.config.dim()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.config.horizon
    }

    #[getter]
    fn beta0(&self) -> f64 {
        self.config.selected_beta0()
    }

    /// beta0 data, gains and every bound, as a dict.
    fn bounds(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let b = compute_bounds(&self.config).map_err(to_py_err)?;
        json_to_py(py, &bounds_json(&self.config, &b))
    }

    /// Simulates and certifies the scenario.
    fn run(&self, py: Python<'_>) -> PyResult<RunResult> {
        let config = self.config.clone();
        let output = py
            .detach(move || tether_core::run(&config))
            .map_err(|e| to_py_err(e.one_based()))?;
        Ok(RunResult {
            config: self.config.clone(),
            output,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(mode={}, n={}, dim={}, horizon={})",
            self.config.kind(),
            self.config.n(),
            self.config.dim(),
            self.config.horizon
        )
    }
}

/// Outcome of [`Scenario::run`].
#[pyclass(module = "tether", frozen)]
struct RunResult {
    config: ScenarioConfig,
    output: RunOutput,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn all_passed(&self) -> bool {
        self.output.report.all_passed
    }

    /// Certification report as a dict.
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let v = serde_json::to_value(&self.output.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        json_to_py(py, &v)
    }

    fn bounds(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &bounds_json(&self.config, &self.output.bounds))
    }

    /// Sample times of the trace.
    fn times(&self) -> Vec<f64> {
        self.output.trace.samples.iter().map(|s| s.t).collect()
    }

    /// Positions as `[sample][agent][coordinate]`.
    fn positions(&self) -> Vec<Vec<Vec<f64>>> {
        self.output
            .trace
            .samples
            .iter()
            .map(|s| s.x.iter().map(|x| x.iter().copied().collect()).collect())
            .collect()
    }

    /// `(agent, time, control)` per trigger, agents numbered from 1.
    fn triggers(&self) -> Vec<(usize, f64, Vec<f64>)> {
        self.output
            .triggers
            .iter()
            .map(|r| (r.agent + 1, r.time, r.control.iter().copied().collect()))
            .collect()
    }

    #[pyo3(signature = (precision = DEFAULT_PRECISION))]
    fn trace_csv(&self, precision: usize) -> String {
        trace_csv(&self.output.trace, &self.config, precision)
    }

    #[pyo3(signature = (precision = DEFAULT_PRECISION))]
    fn triggers_csv(&self, precision: usize) -> String {
        triggers_csv(&self.output.triggers, &self.config, precision)
    }
}

/// Double-integrator gains for a given beta1, as a dict.
#[pyfunction]
fn solve_gains(py: Python<'_>, beta1: f64) -> PyResult<Py<PyAny>> {
    let g = core_solve_gains(beta1).map_err(to_py_err)?;
    let v = serde_json::to_value(g).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Graph Laplacian of an undirected graph given 1-based edges.
#[pyfunction]
fn laplacian(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Vec<Vec<f64>>> {
    let l = core_laplacian(&graph_from(n, edges)?);
    Ok(l.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Smallest nonzero Laplacian eigenvalue.
#[pyfunction]
fn algebraic_connectivity(n: usize, edges: Vec<(usize, usize)>) -> PyResult<f64> {
    core_connectivity(&graph_from(n, edges)?).map_err(to_py_err)
}

#[pymodule]
fn tether(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(solve_gains, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(algebraic_connectivity, m)?)?;
    Ok(())
}
