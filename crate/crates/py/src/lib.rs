//! Python module `postq`. Assemblages and functionals cross the boundary as
//! JSON-shaped Python objects (dicts, lists, floats) or JSON strings, in any
//! layout accepted by `postq_core::io`; results come back as dicts.

use std::f64::consts::PI;

use postq_core::io::{assemblage_from_value, bipartite_from_value, functional_from_value, tripartite_from_value, AnyAssemblage};
use postq_core::locality::{locality_for_all_projective_eps, LOCALITY_EPS};
use postq_core::search::verify_result;
use postq_core::{fixtures, SearchConfig, SearchResult};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use serde_json::Value;

create_exception!(postq, SolverError, PyRuntimeError, "Numerical failure inside a conic solver.");

fn to_py_err(e: postq_core::Error) -> PyErr {
    if e.is_solver_failure() {
        SolverError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// JSON text of a Python object; strings are taken to be JSON already.
fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("invalid JSON: {e}")))
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Bundled example assemblage, full layout.
#[pyfunction]
fn example_assemblage(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &fixtures::example_assemblage())
}

/// Bundled witness functional, full layout.
#[pyfunction]
fn example_witness(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &fixtures::witness_functional())
}

/// Positivity, no-signaling and normalization report.
#[pyfunction]
#[pyo3(signature = (assemblage, tol = 1e-8))]
fn validate<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let report = match assemblage_from_value(to_value(assemblage)?).map_err(to_py_err)? {
        AnyAssemblage::Tripartite(a) => postq_core::validate_tripartite_ns(&a, tol),
        AnyAssemblage::Bipartite(a) => postq_core::validate_bipartite_ns(&a, tol),
    };
    to_py(py, &report)
}

/// `Σ tr(F σ)`.
#[pyfunction]
fn evaluate(assemblage: &Bound<'_, PyAny>, functional: &Bound<'_, PyAny>) -> PyResult<f64> {
    let a = tripartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    let f = functional_from_value(to_value(functional)?).map_err(to_py_err)?;
    postq_core::evaluate_functional(&f, &a).map_err(to_py_err)
}

/// Minimum of the functional over the almost-quantum set.
#[pyfunction]
fn aq_bound<'py>(py: Python<'py>, functional: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let f = functional_from_value(to_value(functional)?).map_err(to_py_err)?;
    let b = py.detach(|| postq_core::aq_bound(&f)).map_err(to_py_err)?;
    to_py(py, &b)
}

/// Almost-quantum membership with a separating functional for non-members.
#[pyfunction]
fn membership<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let a = tripartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    let m = py.detach(|| postq_core::membership_sdp(&a)).map_err(to_py_err)?;
    to_py(py, &m)
}

#[pyfunction]
fn add_noise<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>, mu: f64) -> PyResult<Bound<'py, PyAny>> {
    let a = tripartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    to_py(py, &postq_core::add_noise(&a, mu).map_err(to_py_err)?)
}

#[pyfunction]
fn denoise<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>, mu: f64) -> PyResult<Bound<'py, PyAny>> {
    let a = tripartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    to_py(py, &postq_core::denoise(&a, mu).map_err(to_py_err)?)
}

/// Whether `σ(μ)` gives local behaviours for all projective measurements of
/// the trusted qubit, decided on the octagon set.
#[pyfunction]
#[pyo3(signature = (assemblage, mu = (PI / 8.0).cos(), eps = LOCALITY_EPS))]
fn locality<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>, mu: f64, eps: f64) -> PyResult<Bound<'py, PyAny>> {
    let a = tripartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    let v = py.detach(|| locality_for_all_projective_eps(&a, mu, eps)).map_err(to_py_err)?;
    to_py(py, &v)
}

/// Quantum realization (state and POVMs) of a bipartite assemblage.
#[pyfunction]
#[pyo3(signature = (assemblage, tol = 1e-10))]
fn ghjw_realize<'py>(py: Python<'py>, assemblage: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let a = bipartite_from_value(to_value(assemblage)?).map_err(to_py_err)?;
    to_py(py, &postq_core::ghjw_realize(&a, tol).map_err(to_py_err)?)
}

/// Locality-constrained search; `None` keeps the default of a parameter.
#[pyfunction]
#[pyo3(signature = (seed = None, restarts = None, mu_target = None, symmetrize = true))]
fn run_search(
    py: Python<'_>,
    seed: Option<u64>,
    restarts: Option<usize>,
    mu_target: Option<f64>,
    symmetrize: bool,
) -> PyResult<Bound<'_, PyAny>> {
    let mut cfg = SearchConfig::default();
    cfg.rng_seed = seed.unwrap_or(cfg.rng_seed);
    cfg.max_restarts = restarts.unwrap_or(cfg.max_restarts);
    cfg.mu_target = mu_target.unwrap_or(cfg.mu_target);
    cfg.symmetrize = symmetrize;
    cfg.validate().map_err(to_py_err)?;
    let r = py.detach(|| postq_core::run_search(&cfg)).map_err(to_py_err)?;
    to_py(py, &r)
}

/// Re-checks a search result from its own data.
#[pyfunction]
#[pyo3(signature = (result, tol = 1e-8))]
fn verify_search_result<'py>(py: Python<'py>, result: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let r: SearchResult =
        serde_json::from_value(to_value(result)?).map_err(|e| PyValueError::new_err(format!("not a search result: {e}")))?;
    to_py(py, &py.detach(|| verify_result(&r, tol)).map_err(to_py_err)?)
}

#[pymodule]
pub fn postq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add("EXAMPLE_BETA", fixtures::EXAMPLE_BETA)?;
    m.add("EXAMPLE_BETA_AQ", fixtures::EXAMPLE_BETA_AQ)?;
    m.add_function(wrap_pyfunction!(example_assemblage, m)?)?;
    m.add_function(wrap_pyfunction!(example_witness, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(aq_bound, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(locality, m)?)?;
    m.add_function(wrap_pyfunction!(ghjw_realize, m)?)?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    m.add_function(wrap_pyfunction!(verify_search_result, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_failures_become_solver_errors() {
        Python::attach(|py| {
            assert!(to_py_err(postq_core::Error::Solver("stall".into())).is_instance_of::<SolverError>(py));
            assert!(to_py_err(postq_core::Error::InvalidInput("bad".into())).is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn values_round_trip_through_python_objects() {
        Python::attach(|py| {
            let a = fixtures::example_assemblage();
            let obj = to_py(py, &a).unwrap();
            assert_eq!(tripartite_from_value(to_value(&obj).unwrap()).unwrap(), a);
            let text = pyo3::types::PyString::new(py, postq_core::fixtures::EXAMPLE_WITNESS_JSON);
            assert_eq!(functional_from_value(to_value(text.as_any()).unwrap()).unwrap(), fixtures::witness_functional());
        });
    }
}
