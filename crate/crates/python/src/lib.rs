//! Python bindings for `fluxqed`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fluxqed::decay::{fit_exponential_decay, DecayTrace};
use fluxqed::dressed::{LineKind, ModelConfig};
use fluxqed::error::{FitError, SolveError};
use fluxqed::junction::{ab_inferred_gap, ab_josephson_energy, ej_of_flux, FluxCalibration, JunctionDc, SquidParams};
use fluxqed::sweep::flux_sweep_spectrum;
use fluxqed::transmon::{solve_transmon, ChargeBasisConfig, TransmonParams};
use fluxqed::CavityParams;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solve_err(e: SolveError) -> PyErr {
    match e {
        SolveError::Param(p) => value_err(p),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Transmon eigenfrequencies in GHz, ground state at 0.
#[pyfunction]
#[pyo3(signature = (e_c, e_j, n_g=0.0, n_cut=30, n_levels=6))]
pub fn transmon_levels(e_c: f64, e_j: f64, n_g: f64, n_cut: usize, n_levels: usize) -> PyResult<Vec<f64>> {
    let tp = TransmonParams { e_c, e_j, n_g };
    let te = solve_transmon(&tp, &ChargeBasisConfig::with_cutoff(n_cut), n_levels).map_err(solve_err)?;
    Ok(te.energies)
}

/// Effective Josephson energy of the loop at reduced flux `phi`.
#[pyfunction]
pub fn squid_ej(ej_sum: f64, d: f64, phi: f64) -> PyResult<f64> {
    Ok(ej_of_flux(&SquidParams::new(ej_sum, d).map_err(value_err)?, phi))
}

/// Gap (µV) implied by a normal-state resistance (ohm) and E_J/h (GHz).
#[pyfunction]
pub fn ab_gap_uv(r_n: f64, ej_ghz: f64) -> PyResult<f64> {
    if !(r_n > 0.0 && ej_ghz > 0.0) {
        return Err(value_err("r_n and ej_ghz must be positive"));
    }
    Ok(ab_inferred_gap(r_n, ej_ghz) * 1e6)
}

/// E_J/h (GHz) expected from a normal-state resistance (ohm) and gap (µV).
#[pyfunction]
pub fn ab_ej_ghz(r_n: f64, delta_uv: f64) -> PyResult<f64> {
    Ok(ab_josephson_energy(&JunctionDc::new(r_n, delta_uv * 1e-6).map_err(value_err)?))
}

/// Line frequencies over coil currents as `(current_A, line, frequency_GHz, status)` rows.
#[pyfunction]
#[pyo3(signature = (e_c, ej_sum, d, omega_c, g, current_at_zero_flux, current_per_flux_quantum, currents, lines=None, n_cut=30))]
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    e_c: f64,
    ej_sum: f64,
    d: f64,
    omega_c: f64,
    g: f64,
    current_at_zero_flux: f64,
    current_per_flux_quantum: f64,
    currents: Vec<f64>,
    lines: Option<Vec<String>>,
    n_cut: usize,
) -> PyResult<Vec<(f64, String, f64, String)>> {
    let lines: Vec<LineKind> = match lines {
        Some(l) => l.iter().map(|s| s.parse::<LineKind>().map_err(value_err)).collect::<PyResult<_>>()?,
        None => fluxqed::cli::default_lines(),
    };
    let squid = SquidParams::new(ej_sum, d).map_err(value_err)?;
    let cal = FluxCalibration::new(current_at_zero_flux, current_per_flux_quantum).map_err(value_err)?;
    let model = ModelConfig { charge: ChargeBasisConfig::with_cutoff(n_cut), ..ModelConfig::default() };
    let rows = flux_sweep_spectrum(&squid, &cal, &TransmonParams::new(e_c, 0.0), &CavityParams::new(omega_c, g), &currents, &lines, &model)
        .map_err(solve_err)?;
    Ok(rows.into_iter().map(|r| (r.current_a, r.line_kind.to_string(), r.frequency_ghz, r.status)).collect())
}

/// Fit `A exp(-t / T1) + B`; returns a dict with amplitude, offset, t1_us,
/// t1_sigma_us and residual_rms.
#[pyfunction]
pub fn fit_t1<'py>(py: Python<'py>, delays_us: Vec<f64>, population: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let trace = DecayTrace::new(delays_us, population).map_err(value_err)?;
    let fit = fit_exponential_decay(&trace).map_err(|e| match e {
        FitError::Param(_) | FitError::Data(_) | FitError::InsufficientData { .. } => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    })?;
    let out = PyDict::new(py);
    out.set_item("amplitude", fit.amplitude)?;
    out.set_item("offset", fit.offset)?;
    out.set_item("t1_us", fit.t1_us)?;
    out.set_item("t1_sigma_us", fit.t1_sigma_us)?;
    out.set_item("residual_rms", fit.residual_rms)?;
    Ok(out)
}

/// Run the `fluxqed` command line with `args` (without the program name);
/// returns the exit code.
#[pyfunction]
pub fn run_cli(py: Python<'_>, args: Vec<String>) -> u8 {
    let full: Vec<String> = std::iter::once("fluxqed".to_string()).chain(args).collect();
    py.detach(|| fluxqed::cli::main_with_args(full))
}

#[pymodule]
fn pyfluxqed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(transmon_levels, m)?)?;
    m.add_function(wrap_pyfunction!(squid_ej, m)?)?;
    m.add_function(wrap_pyfunction!(ab_gap_uv, m)?)?;
    m.add_function(wrap_pyfunction!(ab_ej_ghz, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_t1, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
