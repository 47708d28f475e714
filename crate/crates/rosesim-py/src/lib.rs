//! Python bindings: the analytic kernels and the full scenario
//! pipeline, exposed as plain functions returning numbers, tuples, or
//! metrics JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rosesim::cli::config::parse_config_str;
use rosesim::cli::runner::simulate_scenario;
use rosesim::cli::Scenario;
use rosesim::model::WaveVector;
use rosesim::phasematch::{
    classify, echo_wavevector_revived, echo_wavevector_standard, Regime,
};

fn err(e: rosesim::Error) -> PyErr {
    PyValueError::new_err(format!("[{}] {e}", e.module()))
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Emitted => "emitted",
        Regime::Silenced => "silenced",
        Regime::Marginal => "marginal",
    }
}

/// Ideal-pulse echo efficiency of an absorb-rephase-emit cycle:
/// (alpha_l * exp(-alpha_l / 2) * exp(-2 * t23 / t2))^2.
#[pyfunction]
fn analytic_efficiency(alpha_l: f64, t23_s: f64, t2_s: f64) -> f64 {
    rosesim::dynamics::analytic_efficiency(alpha_l, t23_s, t2_s)
}

/// Thin-medium spontaneous-emission estimate in photons per time bin
/// for a fully excited line of optical depth alpha_l.
#[pyfunction]
fn se_photons_per_bin(alpha_l: f64, n_e: f64, bandwidth_rad_s: f64, bin_width_s: f64) -> f64 {
    rosesim::noise::se_rate(alpha_l, n_e, bandwidth_rad_s) * bin_width_s
}

/// Adiabaticity check of a chirped sech pulse against a coherence
/// lifetime: returns (mu_ratio, drive_ratio, decay_ratio, pass).
#[pyfunction]
fn adiabatic_report(omega0: f64, beta: f64, mu: f64, t2_s: f64) -> (f64, f64, f64, bool) {
    let r = rosesim::pulses::validate_adiabatic(omega0, beta, mu, t2_s);
    (r.mu_ratio, r.drive_ratio, r.decay_ratio, r.pass)
}

/// Complex chirped-sech drive sampled at the given times: returns
/// (amplitudes in rad/s, phases in rad).
#[pyfunction]
fn chs_envelope(
    omega0: f64,
    beta: f64,
    mu: f64,
    t_center_s: f64,
    times_s: Vec<f64>,
) -> (Vec<f64>, Vec<f64>) {
    times_s
        .iter()
        .map(|&t| {
            let c = rosesim::pulses::chs_drive_at(omega0, beta, mu, t_center_s, t);
            (c.norm(), c.arg())
        })
        .unzip()
}

/// Effect of a hard spectral gate on a gaussian pulse: returns
/// (duration stretch factor, transmitted energy fraction).
#[pyfunction]
fn filtered_pulse_analysis(tau_s: f64, band_rad_s: f64) -> (f64, f64) {
    let a = rosesim::pulses::filtered_pulse_analysis(tau_s, band_rad_s);
    (a.stretch_factor, a.energy_fraction)
}

/// Phase mismatch and emission regime for both echo orders of a
/// two-direction geometry: returns
/// ((first_mismatch_rad, first_regime), (revived_mismatch_rad, revived_regime)).
#[pyfunction]
fn echo_regimes(
    signal_direction: [f64; 3],
    rephasing_direction: [f64; 3],
    wavelength_m: f64,
    length_m: f64,
) -> PyResult<((f64, String), (f64, String))> {
    let k1 = WaveVector::from_wavelength(signal_direction, wavelength_m).map_err(err)?;
    let k2 = WaveVector::from_wavelength(rephasing_direction, wavelength_m).map_err(err)?;
    let k = 2.0 * std::f64::consts::PI / wavelength_m;
    let first = classify(echo_wavevector_standard(&k1, &k2), k, length_m);
    let revived = classify(echo_wavevector_revived(&k1, &k2, &k2), k, length_m);
    Ok((
        (first.mismatch_rad, regime_name(first.regime).to_string()),
        (revived.mismatch_rad, regime_name(revived.regime).to_string()),
    ))
}

/// Full scenario pipeline from a JSON config string (use "{}" for the
/// baseline). Returns the metrics record as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_json, seed=None))]
fn simulate_config(config_json: &str, seed: Option<u64>) -> PyResult<String> {
    let mut scenario = parse_config_str(config_json).map_err(err)?;
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    let run = simulate_scenario(&scenario).map_err(err)?;
    serde_json::to_string(&run.metrics).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Baseline scenario end to end with the given counting seed; returns
/// the metrics record as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed=None))]
fn run_baseline(seed: Option<u64>) -> PyResult<String> {
    let mut scenario = Scenario::baseline();
    // A coarser ensemble keeps the smoke test quick while leaving the
    // counting read-outs well inside their tolerances.
    scenario.simulation.detuning_points = 201;
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    let run = simulate_scenario(&scenario).map_err(err)?;
    serde_json::to_string(&run.metrics).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn rosesim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analytic_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(se_photons_per_bin, m)?)?;
    m.add_function(wrap_pyfunction!(adiabatic_report, m)?)?;
    m.add_function(wrap_pyfunction!(chs_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(filtered_pulse_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(echo_regimes, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_baseline, m)?)?;
    Ok(())
}
