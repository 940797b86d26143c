//! Python bindings. Configurations and profiles travel as JSON strings in the
//! same schema the command-line tool reads; results come back as JSON.

use macpower_core::cli::{ExperimentConfig, Resolved};
use macpower_core::policy::ProfileDocument;
use macpower_core::{Error, PolicyProfile};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(macpower, RegularityError, PyException, "A regularity condition fails.");
create_exception!(macpower, InconclusiveError, PyException, "Monte Carlo intervals straddle zero.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Regularity(m) => RegularityError::new_err(m),
        Error::Inconclusive(m) => InconclusiveError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn resolve(config: &str) -> PyResult<Resolved> {
    ExperimentConfig::from_json(config).and_then(|c| c.resolve()).map_err(to_py)
}

fn profile(r: &Resolved, doc: Option<&str>) -> PyResult<PolicyProfile> {
    match doc {
        Some(text) => {
            let doc: ProfileDocument = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            PolicyProfile::from_document(doc, &r.spec).map_err(to_py)
        }
        None => PolicyProfile::invariant(&r.spec).map_err(to_py),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// `N(h, g)` for the power-law constraint of order `p` and Gaussian noise.
#[pyfunction]
fn scaled_entropy_power(p: f64, sigma2: f64, h: f64, g: f64) -> PyResult<f64> {
    macpower_core::EntropyPowerModel::gaussian_power_law(p, sigma2)
        .and_then(|m| m.scaled_entropy_power(h, g))
        .map_err(to_py)
}

/// Invariant policy of every user, as a profile document.
#[pyfunction]
fn invariant_profile(config: &str) -> PyResult<String> {
    let r = resolve(config)?;
    json(&profile(&r, None)?.to_document())
}

#[pyfunction]
#[pyo3(signature = (config, profile_json=None))]
fn expected_sum_rate(config: &str, profile_json: Option<&str>) -> PyResult<String> {
    let r = resolve(config)?;
    let p = profile(&r, profile_json)?;
    json(&macpower_core::rate::expected_sum_rate(&p, &r.spec, &r.settings).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (config, user, profile_json=None))]
fn user_objective(config: &str, user: usize, profile_json: Option<&str>) -> PyResult<String> {
    let r = resolve(config)?;
    let p = profile(&r, profile_json)?;
    json(&macpower_core::rate::user_objective(user, &p, &r.spec, &r.settings).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (config, user, profile_json=None))]
fn best_response(py: Python<'_>, config: &str, user: usize, profile_json: Option<&str>) -> PyResult<String> {
    let r = resolve(config)?;
    let p = profile(&r, profile_json)?;
    let result = py
        .detach(|| macpower_core::optimize::best_response(user, &p, &r.spec, &r.grid, &r.settings))
        .map_err(to_py)?;
    json(&result)
}

#[pyfunction]
fn find_n_star(py: Python<'_>, config: &str, n_min: usize, n_max: usize) -> PyResult<String> {
    let r = resolve(config)?;
    let report = py
        .detach(|| macpower_core::optimize::find_n_star(&r.template, n_min, n_max, &r.grid, &r.settings))
        .map_err(to_py)?;
    json(&report)
}

#[pyfunction]
fn mu_lower_bound(config: &str, user: usize) -> PyResult<f64> {
    let r = resolve(config)?;
    macpower_core::optimize::mu_lower_bound(user, &r.spec).map_err(to_py)
}

#[pymodule]
fn macpower(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RegularityError", m.py().get_type::<RegularityError>())?;
    m.add("InconclusiveError", m.py().get_type::<InconclusiveError>())?;
    m.add_function(wrap_pyfunction!(scaled_entropy_power, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_profile, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(user_objective, m)?)?;
    m.add_function(wrap_pyfunction!(best_response, m)?)?;
    m.add_function(wrap_pyfunction!(find_n_star, m)?)?;
    m.add_function(wrap_pyfunction!(mu_lower_bound, m)?)?;
    Ok(())
}
