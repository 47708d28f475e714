//! Config files: JSON with explicit unit suffixes, merged over the
//! baseline scenario. Every quantity accepts either a bare number in
//! the field's SI base unit or a string like "10 us" / "80 kHz" /
//! "8 mm"; frequencies written as strings are ordinary frequencies and
//! are converted to angular units where the field calls for them.

use serde_json::Value;

use crate::cli::Scenario;
use crate::error::{Error, Result};
use crate::model::InhomogeneousModel;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// How a field interprets numbers and unit suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    /// Seconds; suffixes s, ms, us, ns, ps.
    Time,
    /// Meters; suffixes m, mm, um, nm.
    Length,
    /// Ordinary frequency in Hz; suffixes hz, khz, mhz, ghz.
    Frequency,
    /// Angular frequency in rad/s as a bare number; frequency-suffixed
    /// strings are multiplied by 2 pi.
    AngularFrequency,
    /// Unitless; "photons" and "rad" are accepted as no-op suffixes.
    Dimensionless,
}

fn bad(field: &str, detail: String) -> Error {
    Error::Config(format!("{field}: {detail}"))
}

fn scale_for(unit: Unit, suffix: &str, field: &str) -> Result<f64> {
    let s = suffix.to_ascii_lowercase();
    let scale = match unit {
        Unit::Time => match s.as_str() {
            "s" => 1.0,
            "ms" => 1e-3,
            "us" => 1e-6,
            "ns" => 1e-9,
            "ps" => 1e-12,
            _ => return Err(bad(field, format!("unknown time unit '{suffix}' (use s/ms/us/ns/ps)"))),
        },
        Unit::Length => match s.as_str() {
            "m" => 1.0,
            "mm" => 1e-3,
            "um" => 1e-6,
            "nm" => 1e-9,
            _ => return Err(bad(field, format!("unknown length unit '{suffix}' (use m/mm/um/nm)"))),
        },
        Unit::Frequency | Unit::AngularFrequency => {
            let ordinary = match s.as_str() {
                "hz" => 1.0,
                "khz" => 1e3,
                "mhz" => 1e6,
                "ghz" => 1e9,
                _ => {
                    return Err(bad(
                        field,
                        format!("unknown frequency unit '{suffix}' (use Hz/kHz/MHz/GHz)"),
                    ))
                }
            };
            if unit == Unit::AngularFrequency {
                ordinary * TWO_PI
            } else {
                ordinary
            }
        }
        Unit::Dimensionless => match s.as_str() {
            "photons" | "rad" => 1.0,
            _ => {
                return Err(bad(
                    field,
                    format!("field is dimensionless; unexpected unit '{suffix}'"),
                ))
            }
        },
    };
    Ok(scale)
}

/// Parses a quantity: a bare JSON number in the field's SI base unit,
/// or a string "<value> <unit>".
fn quantity(v: &Value, field: &str, unit: Unit) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| bad(field, "number out of range".into())),
        Value::String(s) => {
            let mut parts = s.split_whitespace();
            let num = parts
                .next()
                .ok_or_else(|| bad(field, "empty quantity string".into()))?;
            let value: f64 = num
                .parse()
                .map_err(|_| bad(field, format!("cannot parse '{num}' as a number")))?;
            match parts.next() {
                None => Ok(value),
                Some(suffix) => {
                    if parts.next().is_some() {
                        return Err(bad(field, format!("trailing text in quantity '{s}'")));
                    }
                    Ok(value * scale_for(unit, suffix, field)?)
                }
            }
        }
        other => Err(bad(field, format!("expected number or \"value unit\" string, got {other}"))),
    }
}

fn integer(v: &Value, field: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| bad(field, format!("expected a non-negative integer, got {v}")))
}

fn direction(v: &Value, field: &str) -> Result<[f64; 3]> {
    let arr = v
        .as_array()
        .ok_or_else(|| bad(field, "expected a 3-component array".into()))?;
    if arr.len() != 3 {
        return Err(bad(field, format!("expected 3 components, got {}", arr.len())));
    }
    let mut out = [0.0; 3];
    for (i, x) in arr.iter().enumerate() {
        out[i] = x
            .as_f64()
            .ok_or_else(|| bad(field, format!("component {i} is not a number")))?;
    }
    Ok(out)
}

fn section<'v>(root: &'v Value, name: &str) -> Result<Option<&'v serde_json::Map<String, Value>>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Object(map)) => Ok(Some(map)),
        Some(other) => Err(bad(name, format!("expected an object, got {other}"))),
    }
}

/// Parses a units-based config JSON string into a resolved scenario.
/// Every section and field is optional and overrides the baseline;
/// unknown sections or fields are errors (they are almost always unit
/// or spelling mistakes). A metrics record (which carries a resolved
/// "scenario" object) is also accepted, enabling exact re-runs.
pub fn parse_config_str(text: &str) -> Result<Scenario> {
    let root: Value = serde_json::from_str(text)?;
    parse_config_value(&root)
}

/// See [`parse_config_str`].
pub fn parse_config_value(root: &Value) -> Result<Scenario> {
    if !root.is_object() {
        return Err(Error::Config("top level must be a JSON object".into()));
    }
    // Metrics records embed the fully resolved scenario; accept them
    // directly so any past run can be repeated bit-exactly.
    if let Some(embedded) = root.get("scenario") {
        let scenario: Scenario = serde_json::from_value(embedded.clone())
            .map_err(|e| bad("scenario", format!("embedded resolved scenario: {e}")))?;
        return Ok(scenario);
    }

    const SECTIONS: [&str; 8] = [
        "medium", "timeline", "signal", "rephasing", "geometry", "detection", "noise", "simulation",
    ];
    for key in root.as_object().expect("checked object").keys() {
        if !SECTIONS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "unknown section '{key}' (expected one of {SECTIONS:?})"
            )));
        }
    }

    let mut s = Scenario::baseline();

    if let Some(map) = section(root, "medium")? {
        for (key, v) in map {
            let f = format!("medium.{key}");
            match key.as_str() {
                "alpha_l" => s.medium.alpha_l = quantity(v, &f, Unit::Dimensionless)?,
                "length" => s.medium.length = quantity(v, &f, Unit::Length)?,
                "t1" => s.medium.t1 = quantity(v, &f, Unit::Time)?,
                "t2" => s.medium.t2 = quantity(v, &f, Unit::Time)?,
                "n_slices" => s.medium.n_slices = integer(v, &f)? as usize,
                "gaussian_width" => {
                    s.medium.inhomogeneous = InhomogeneousModel::Gaussian {
                        width: quantity(v, &f, Unit::AngularFrequency)?,
                    }
                }
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "timeline")? {
        for (key, v) in map {
            let f = format!("timeline.{key}");
            match key.as_str() {
                "t1" => s.timeline.t1 = quantity(v, &f, Unit::Time)?,
                "t2" => s.timeline.t2 = quantity(v, &f, Unit::Time)?,
                "t3" => s.timeline.t3 = quantity(v, &f, Unit::Time)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "signal")? {
        for (key, v) in map {
            let f = format!("signal.{key}");
            match key.as_str() {
                "tau" => s.signal.tau = quantity(v, &f, Unit::Time)?,
                "photon_number" => s.signal.photon_number = quantity(v, &f, Unit::Dimensionless)?,
                "reference_area" => s.signal.reference_area = quantity(v, &f, Unit::Dimensionless)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "rephasing")? {
        for (key, v) in map {
            let f = format!("rephasing.{key}");
            match key.as_str() {
                "omega0" => s.rephasing.omega0 = quantity(v, &f, Unit::AngularFrequency)?,
                "beta" => s.rephasing.beta = quantity(v, &f, Unit::AngularFrequency)?,
                "mu" => s.rephasing.mu = quantity(v, &f, Unit::Dimensionless)?,
                "count" => s.rephasing.count = integer(v, &f)? as usize,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "geometry")? {
        for (key, v) in map {
            let f = format!("geometry.{key}");
            match key.as_str() {
                "signal_direction" => s.geometry.signal_direction = direction(v, &f)?,
                "rephasing_direction" => s.geometry.rephasing_direction = direction(v, &f)?,
                "wavelength" => s.geometry.wavelength = quantity(v, &f, Unit::Length)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "detection")? {
        for (key, v) in map {
            let f = format!("detection.{key}");
            match key.as_str() {
                "eta_photodetector" => {
                    s.detection.eta_photodetector = quantity(v, &f, Unit::Dimensionless)?
                }
                "eta_collection" => s.detection.eta_collection = quantity(v, &f, Unit::Dimensionless)?,
                "spectral_filter_factor" => {
                    s.detection.spectral_filter_factor = quantity(v, &f, Unit::Dimensionless)?
                }
                "bin_width" => s.detection.bin_width = quantity(v, &f, Unit::Time)?,
                "n_sequences" => s.detection.n_sequences = integer(v, &f)?,
                "rep_rate" => s.detection.rep_rate = quantity(v, &f, Unit::Frequency)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "noise")? {
        for (key, v) in map {
            let f = format!("noise.{key}");
            match key.as_str() {
                "n_e_after_one_chs" => {
                    s.noise.n_e_after_one_chs = quantity(v, &f, Unit::Dimensionless)?
                }
                "n_e_after_two_chs" => {
                    s.noise.n_e_after_two_chs = quantity(v, &f, Unit::Dimensionless)?
                }
                "coherent_artifact_photons" => {
                    s.noise.coherent_artifact_photons = quantity(v, &f, Unit::Dimensionless)?
                }
                "se_scale" => s.noise.se_scale = quantity(v, &f, Unit::Dimensionless)?,
                "stray_light" => s.noise.stray_light = quantity(v, &f, Unit::Frequency)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    if let Some(map) = section(root, "simulation")? {
        for (key, v) in map {
            let f = format!("simulation.{key}");
            match key.as_str() {
                "detuning_span" => {
                    s.simulation.detuning_span = quantity(v, &f, Unit::AngularFrequency)?
                }
                "detuning_points" => s.simulation.detuning_points = integer(v, &f)? as usize,
                "dt" => {
                    s.simulation.dt = match v {
                        Value::String(txt) if txt == "auto" => None,
                        other => Some(quantity(other, &f, Unit::Time)?),
                    }
                }
                "output_interval" => s.simulation.output_interval = quantity(v, &f, Unit::Time)?,
                "seed" => s.simulation.seed = integer(v, &f)?,
                _ => return Err(bad(&f, "unknown field".into())),
            }
        }
    }

    let pulses = s.pulses()?;
    let violations = crate::model::validate_scenario(&s.medium, &pulses, &s.timeline);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidScenario(format!("{}: {}", v.field, v.message)));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_is_the_baseline() {
        let s = parse_config_str("{}").unwrap();
        assert_eq!(s, Scenario::baseline());
    }

    #[test]
    fn unit_suffixes_resolve_to_si() {
        let s = parse_config_str(
            r#"{
                "medium": {"alpha_l": 1.4, "length": "8 mm", "t1": "460 us", "t2": "55 us"},
                "timeline": {"t2": "12 us", "t3": "33 us"},
                "signal": {"tau": "2 us", "photon_number": "14 photons"},
                "rephasing": {"omega0": "800 kHz", "beta": "80 kHz", "mu": 3},
                "geometry": {"wavelength": "793 nm"},
                "detection": {"bin_width": "256 ns", "rep_rate": "50 Hz"},
                "simulation": {"detuning_span": "3 MHz", "seed": 42}
            }"#,
        )
        .unwrap();
        assert_relative_eq!(s.medium.length, 8e-3);
        assert_relative_eq!(s.medium.t1, 460e-6);
        assert_relative_eq!(s.timeline.t2, 12e-6);
        assert_relative_eq!(s.timeline.t3, 33e-6);
        assert_relative_eq!(s.signal.photon_number, 14.0);
        // Frequencies become angular where the physics wants rad/s.
        assert_relative_eq!(s.rephasing.omega0, TWO_PI * 800e3);
        assert_relative_eq!(s.rephasing.beta, TWO_PI * 80e3);
        assert_relative_eq!(s.simulation.detuning_span, TWO_PI * 3e6);
        // The repetition rate stays an ordinary frequency.
        assert_relative_eq!(s.detection.rep_rate, 50.0);
        assert_relative_eq!(s.geometry.wavelength, 793e-9);
        assert_eq!(s.simulation.seed, 42);
    }

    #[test]
    fn bare_numbers_are_si_base_units() {
        let s = parse_config_str(r#"{"timeline": {"t2": 0.00001, "t3": 0.00003}}"#).unwrap();
        assert_relative_eq!(s.timeline.t2, 10e-6);
        assert_relative_eq!(s.timeline.t3, 30e-6);
    }

    #[test]
    fn wrong_unit_kind_is_rejected() {
        let err = parse_config_str(r#"{"timeline": {"t2": "10 kHz"}}"#).unwrap_err();
        assert!(err.to_string().contains("timeline.t2"), "{err}");
        let err = parse_config_str(r#"{"rephasing": {"beta": "80 us"}}"#).unwrap_err();
        assert!(err.to_string().contains("rephasing.beta"), "{err}");
    }

    #[test]
    fn unknown_fields_and_sections_are_rejected() {
        let err = parse_config_str(r#"{"medum": {}}"#).unwrap_err();
        assert!(err.to_string().contains("medum"), "{err}");
        let err = parse_config_str(r#"{"signal": {"tua": "2 us"}}"#).unwrap_err();
        assert!(err.to_string().contains("signal.tua"), "{err}");
    }

    #[test]
    fn misordered_timeline_is_named_in_the_error() {
        let err = parse_config_str(r#"{"timeline": {"t2": "40 us"}}"#).unwrap_err();
        assert!(err.to_string().contains("timeline"), "{err}");
    }

    #[test]
    fn metrics_records_round_trip_scenarios() {
        let mut scenario = Scenario::baseline();
        scenario.simulation.seed = 99;
        let record = serde_json::json!({
            "schema": "metrics-v1",
            "scenario": scenario,
            "extra": {"anything": true}
        });
        let parsed = parse_config_value(&record).unwrap();
        assert_eq!(parsed, scenario);
    }

    #[test]
    fn single_rephasing_pulse_config() {
        let s = parse_config_str(r#"{"rephasing": {"count": 1}}"#).unwrap();
        assert_eq!(s.rephasing.count, 1);
        assert_eq!(s.pulses().unwrap().len(), 2);
    }
}
