//! Python extension module exposing the stringwave solvers. The bindings
//! stay thin: configs arrive as TOML text, runs execute through the same
//! pipeline the CLI uses, and results come back as manifest JSON plus the
//! on-disk artifacts in the chosen output directory.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use stringwave::config::RunConfig;
use stringwave::error::Error;
use stringwave::geometry::Chart;
use stringwave::runner;

fn to_py_err(e: Error) -> PyErr {
    match &e {
        Error::Validation(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn manifest_json(m: &stringwave::output::RunManifest) -> PyResult<String> {
    serde_json::to_string_pretty(m).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Christoffel symbols Gamma^i_{jk} of the stereographic chart of the
/// sphere of the given radius, evaluated at the chart point y, as a
/// nested list indexed [i][j][k].
#[pyfunction]
fn sphere_christoffel(radius: f64, y: Vec<f64>) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let chart = Chart::stereographic(radius, y.len());
    let t = chart.christoffel(&y).map_err(to_py_err)?;
    let n = t.dim();
    Ok((0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| t.at(i, j, k)).collect()).collect())
        .collect())
}

/// Run the Cauchy evolution described by the TOML text into out_dir,
/// returning the run manifest as a JSON string.
#[pyfunction]
fn evolve_toml(config_toml: &str, out_dir: &str) -> PyResult<String> {
    let cfg = RunConfig::from_toml_str(config_toml).map_err(to_py_err)?;
    let manifest = runner::run_evolve(cfg, Path::new(out_dir)).map_err(to_py_err)?;
    manifest_json(&manifest)
}

/// Run the characteristic light-cone solver described by the TOML text
/// into out_dir, returning the run manifest as a JSON string.
#[pyfunction]
fn lightcone_toml(config_toml: &str, out_dir: &str) -> PyResult<String> {
    let cfg = RunConfig::from_toml_str(config_toml).map_err(to_py_err)?;
    let manifest = runner::run_lightcone(cfg, Path::new(out_dir)).map_err(to_py_err)?;
    manifest_json(&manifest)
}

/// Re-verify a completed run directory. Returns (checks_passed, breaches);
/// an untouched run comes back with an empty breach list.
#[pyfunction]
fn check_dir(dir: &str) -> PyResult<(usize, Vec<String>)> {
    let report = runner::run_check(Path::new(dir)).map_err(to_py_err)?;
    Ok((report.checks, report.breaches))
}

#[pymodule]
fn stringwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_christoffel, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_toml, m)?)?;
    m.add_function(wrap_pyfunction!(lightcone_toml, m)?)?;
    m.add_function(wrap_pyfunction!(check_dir, m)?)?;
    Ok(())
}
