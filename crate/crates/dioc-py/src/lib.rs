//! Python bindings for the `dioc` toolkit.
//!
//! The module `pydioc` exposes [`Choreography`], [`Network`], [`Host`] and a
//! handful of functions that return JSON text for verification reports.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dioc::ast::{annotate, roles_of, DiocProcess, GlobalState, UpdateSet};
use dioc::connectedness::check_connected;
use dioc::dioc_sem::{dioc_trace, DiocSystem, HostEnv, Policy, Schedule};
use dioc::dpoc_sem::{dpoc_trace, DpocSystem};
use dioc::events::{check_projection_events, check_well_annotated_dpoc};
use dioc::parser::{parse_dioc_str, parse_dpoc_network, pretty_dioc, pretty_dpoc, pretty_network, Diagnostic, SourceFile};
use dioc::projection::{proj, Network as RsNetwork};
use dioc::verify::{check_equiv, check_freedom, simplify_network, weaken, ExploreOptions};

fn diagnostics(diags: &[Diagnostic]) -> PyErr {
    let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    PyValueError::new_err(text.join("\n"))
}

/// An annotated choreography.
#[pyclass(frozen, module = "pydioc")]
#[derive(Clone)]
pub struct Choreography {
    pub inner: DiocProcess,
}

#[pymethods]
impl Choreography {
    #[staticmethod]
    pub fn parse(text: &str) -> PyResult<Self> {
        let p = parse_dioc_str(text).map_err(|d| diagnostics(&d))?;
        Ok(Choreography { inner: annotate(&p) })
    }

    pub fn roles(&self) -> Vec<String> {
        roles_of(&self.inner).iter().map(|r| r.to_string()).collect()
    }

    pub fn size(&self) -> usize {
        self.inner.size()
    }

    /// Connectedness violations as `line:col: error[CODE]: message` strings.
    pub fn violations(&self) -> Vec<String> {
        check_connected(&self.inner).violations.iter().map(|v| v.to_diagnostic().to_string()).collect()
    }

    pub fn is_connected(&self) -> bool {
        check_connected(&self.inner).connected
    }

    pub fn project(&self) -> Network {
        Network { inner: proj(&self.inner, &GlobalState::default()) }
    }

    pub fn __str__(&self) -> String {
        pretty_dioc(&self.inner)
    }

    pub fn __repr__(&self) -> String {
        format!("Choreography(size={}, roles={:?})", self.size(), self.roles())
    }
}

/// A network of endpoint processes, one per role.
#[pyclass(frozen, module = "pydioc")]
#[derive(Clone)]
pub struct Network {
    pub inner: RsNetwork,
}

#[pymethods]
impl Network {
    #[staticmethod]
    pub fn parse(text: &str) -> PyResult<Self> {
        Ok(Network { inner: parse_dpoc_network(text).map_err(|d| diagnostics(&d))? })
    }

    pub fn roles(&self) -> Vec<String> {
        self.inner.roles.keys().map(|r| r.to_string()).collect()
    }

    /// The pretty-printed process of every role, with padding removed.
    pub fn processes(&self) -> BTreeMap<String, String> {
        simplify_network(&self.inner).roles.iter().map(|(r, (p, _))| (r.to_string(), pretty_dpoc(p))).collect()
    }

    /// Violations of the well-annotatedness conditions, as JSON objects.
    pub fn annotation_violations(&self) -> Vec<String> {
        check_well_annotated_dpoc(&self.inner).violations.iter().map(|v| v.to_json().to_string()).collect()
    }

    pub fn __str__(&self) -> String {
        pretty_network(&simplify_network(&self.inner))
    }
}

/// Host functions, input queues and available updates.
#[pyclass(module = "pydioc")]
#[derive(Clone, Default)]
pub struct Host {
    env: HostEnv,
    updates: Vec<(String, DiocProcess)>,
}

#[pymethods]
impl Host {
    #[new]
    #[pyo3(signature = (functions_json=None, inputs_json=None))]
    pub fn new(functions_json: Option<&str>, inputs_json: Option<&str>) -> PyResult<Self> {
        let mut env = HostEnv::default();
        if let Some(f) = functions_json {
            env.functions = HostEnv::functions_from_json(f).map_err(|e| PyValueError::new_err(e.to_string()))?;
        }
        if let Some(i) = inputs_json {
            env.inputs = HostEnv::inputs_from_json(i).map_err(|e| PyValueError::new_err(e.to_string()))?;
        }
        Ok(Host { env, updates: Vec::new() })
    }

    /// Make an update available to every scope.
    pub fn add_update(&mut self, name: &str, text: &str) -> PyResult<()> {
        let src = SourceFile::new(name, text);
        let (_, body) = dioc::parser::parse_update(&src).map_err(|d| diagnostics(&d))?;
        self.updates.push((name.to_string(), body));
        Ok(())
    }

    pub fn update_names(&self) -> Vec<String> {
        self.updates.iter().map(|(n, _)| n.clone()).collect()
    }
}

impl Host {
    fn update_set(&self) -> UpdateSet {
        UpdateSet::new(self.updates.clone())
    }
}

fn options(max_steps: usize, loop_bound: u32, budget: usize) -> PyResult<ExploreOptions> {
    if max_steps == 0 || loop_bound == 0 {
        return Err(PyValueError::new_err("bounds must be at least 1"));
    }
    Ok(ExploreOptions { bound: max_steps, loop_bound, schedule: Schedule::none(), budget })
}

/// Run a choreography (`level="dioc"`) or its projection (`level="dpoc"`)
/// and return the trace as a list of JSON label objects.
#[pyfunction]
#[pyo3(signature = (program, host, level="dioc", seed=None, max_steps=64, weak=false))]
pub fn run(
    program: &Choreography,
    host: &Host,
    level: &str,
    seed: Option<u64>,
    max_steps: usize,
    weak: bool,
) -> PyResult<Vec<String>> {
    let policy = seed.map_or(Policy::FirstEnabled, Policy::Seeded);
    let dioc = DiocSystem::new(program.inner.clone(), GlobalState::default(), host.update_set());
    let trace = match level {
        "dioc" => dioc_trace(&dioc, &host.env, &policy, max_steps, &Schedule::none()),
        "dpoc" => {
            let net = proj(&dioc.proc, &dioc.state);
            let sys = DpocSystem::new(net, host.update_set()).with_allocator(dioc.next_index);
            dpoc_trace(&sys, &host.env, &policy, max_steps, &Schedule::none())
        }
        other => return Err(PyValueError::new_err(format!("unknown level `{other}`"))),
    }
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let trace = if weak { weaken(&trace) } else { trace };
    Ok(trace.iter().map(|l| l.to_json().to_string()).collect())
}

/// Bounded weak-trace comparison of a choreography and its projection.
#[pyfunction]
#[pyo3(signature = (program, host, max_steps=40, loop_bound=2, budget=2_000_000))]
pub fn equiv(program: &Choreography, host: &Host, max_steps: usize, loop_bound: u32, budget: usize) -> PyResult<String> {
    let sys = DiocSystem::new(program.inner.clone(), GlobalState::default(), host.update_set());
    let report = check_equiv(&sys, &host.env, &options(max_steps, loop_bound, budget)?, None)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(report.to_json().to_string())
}

/// Deadlock, race and orphan freedom of the projection.
#[pyfunction]
#[pyo3(signature = (program, host, max_steps=40, loop_bound=2, budget=2_000_000))]
pub fn freedom(program: &Choreography, host: &Host, max_steps: usize, loop_bound: u32, budget: usize) -> PyResult<String> {
    let net = proj(&program.inner, &GlobalState::default());
    let sys = DpocSystem::new(net, host.update_set()).with_allocator(program.inner.max_index() + 1);
    Ok(check_freedom(&sys, &host.env, &options(max_steps, loop_bound, budget)?).to_json().to_string())
}

/// Choreography events that are missing or unordered in the projection.
#[pyfunction]
pub fn projection_event_gaps(program: &Choreography) -> usize {
    let r = check_projection_events(&program.inner, &proj(&program.inner, &GlobalState::default()));
    r.missing.len() + r.unordered.len()
}

#[pymodule]
fn pydioc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Choreography>()?;
    m.add_class::<Network>()?;
    m.add_class::<Host>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(equiv, m)?)?;
    m.add_function(wrap_pyfunction!(freedom, m)?)?;
    m.add_function(wrap_pyfunction!(projection_event_gaps, m)?)?;
    Ok(())
}
