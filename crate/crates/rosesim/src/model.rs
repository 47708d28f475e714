//! Shared domain types: storage medium, pulse descriptions, timeline,
//! beam geometry, and the photon-detection chain.
//!
//! All quantities are SI internally: seconds, meters, and angular
//! frequencies in rad/s. Conversions from user-facing units (µs, kHz, mm)
//! happen once, at config parsing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulses::SampledDrive;

/// Optical wavelength of the working transition used by built-in presets.
pub const DEFAULT_WAVELENGTH: f64 = 793e-9;

/// Two-level ensemble host: optical depth, relaxation, and the 1D slice
/// discretization used by the propagation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    /// Resonant optical depth alpha*L (dimensionless).
    pub alpha_l: f64,
    /// Physical crystal length in meters.
    pub length: f64,
    /// Population lifetime T1 in seconds.
    pub t1: f64,
    /// Coherence lifetime T2 in seconds.
    pub t2: f64,
    /// Number of slices in the 1D propagation model.
    pub n_slices: usize,
    /// Detuning weight model of the inhomogeneous line.
    pub inhomogeneous: InhomogeneousModel,
}

impl Default for Medium {
    /// Baseline experiment values: alpha_l 1.4, 8 mm crystal,
    /// T1 = 460 µs, T2 = 55 µs, 64 slices, flat line.
    fn default() -> Self {
        Medium {
            alpha_l: 1.4,
            length: 8e-3,
            t1: 460e-6,
            t2: 55e-6,
            n_slices: 64,
            inhomogeneous: InhomogeneousModel::Flat,
        }
    }
}

/// Shape of the inhomogeneous line across the simulated detuning grid.
///
/// The physical line is orders of magnitude broader than the pulse
/// bandwidth, so `Flat` (uniform weights) is the default; `Gaussian`
/// exists for generality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InhomogeneousModel {
    /// Uniform weights over the detuning grid.
    Flat,
    /// Gaussian weights with the given spectral standard deviation (rad/s).
    Gaussian { width: f64 },
}

/// A plane-wave beam: unit direction and magnitude k = 2*pi/lambda (rad/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    direction: [f64; 3],
    magnitude: f64,
}

impl WaveVector {
    /// Builds a wavevector from any nonzero direction (normalized here)
    /// and a positive magnitude in rad/m.
    pub fn new(direction: [f64; 3], magnitude: f64) -> Result<Self> {
        let norm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidScenario(
                "wavevector direction must be a nonzero finite vector".into(),
            ));
        }
        if !(magnitude > 0.0) {
            return Err(Error::InvalidScenario(
                "wavevector magnitude must be positive".into(),
            ));
        }
        Ok(WaveVector {
            direction: [direction[0] / norm, direction[1] / norm, direction[2] / norm],
            magnitude,
        })
    }

    /// Builds a wavevector with magnitude 2*pi/lambda.
    pub fn from_wavelength(direction: [f64; 3], wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::InvalidScenario("wavelength must be positive".into()));
        }
        WaveVector::new(direction, 2.0 * std::f64::consts::PI / wavelength)
    }

    /// Unit propagation direction.
    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    /// Magnitude k in rad/m.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Full vector k * direction in rad/m.
    pub fn vector(&self) -> [f64; 3] {
        [
            self.direction[0] * self.magnitude,
            self.direction[1] * self.magnitude,
            self.direction[2] * self.magnitude,
        ]
    }
}

/// Pulse arrival times in seconds: signal at t1, rephasing pulses at t2, t3.
///
/// Echo bookkeeping: the first (silenced) echo forms at t1 + 2*t12 and the
/// revived echo at t1 + 2*t23, where t12 = t2 - t1 and t23 = t3 - t2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl Default for Timeline {
    /// Baseline: signal at 0, rephasing pulses at 10 µs and 30 µs.
    fn default() -> Self {
        Timeline {
            t1: 0.0,
            t2: 10e-6,
            t3: 30e-6,
        }
    }
}

impl Timeline {
    /// Signal-to-first-rephasing delay t12 = t2 - t1.
    pub fn t12(&self) -> f64 {
        self.t2 - self.t1
    }

    /// Rephasing-pulse separation t23 = t3 - t2.
    pub fn t23(&self) -> f64 {
        self.t3 - self.t2
    }

    /// Time of the first (spatially silenced) rephasing peak, t1 + 2*t12.
    pub fn silenced_echo_time(&self) -> f64 {
        self.t1 + 2.0 * self.t12()
    }

    /// Time of the revived echo, t1 + 2*t23.
    pub fn revived_echo_time(&self) -> f64 {
        self.t1 + 2.0 * self.t23()
    }
}

/// Role of a pulse in the sequence, used for bookkeeping and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Signal,
    Rephasing,
}

/// Functional form and parameters of one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PulseKind {
    /// Weak data pulse with intensity profile exp(-(t-t0)^2/tau^2).
    ///
    /// `photon_number` is detection-side metadata: the Bloch drive always
    /// uses `reference_area` (weak-pulse linear regime), and photon counts
    /// scale the emitted flux afterwards.
    GaussianSignal {
        tau: f64,
        photon_number: f64,
        reference_area: f64,
    },
    /// Complex hyperbolic-secant rephasing pulse with peak Rabi frequency
    /// omega0, rate beta, and chirp parameter mu (all rad/s except mu).
    Chs { omega0: f64, beta: f64, mu: f64 },
    /// Arbitrary sampled drive, interpolated onto the integration grid.
    CustomSampled { drive: SampledDrive },
}

/// One pulse of the sequence: envelope parameters plus spatial mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub kind: PulseKind,
    /// Envelope center in seconds.
    pub t_center: f64,
    pub wavevector: WaveVector,
    pub polarization: Polarization,
}

impl PulseEnvelope {
    /// True for the weak data pulse kinds that define the signal channel.
    pub fn is_signal(&self) -> bool {
        matches!(self.kind, PulseKind::GaussianSignal { .. })
    }
}

/// Photon collection and counting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionChain {
    /// Photodetector quantum efficiency.
    pub eta_photodetector: f64,
    /// Collection (mode-matching and optics) efficiency.
    pub eta_collection: f64,
    /// Suppression factor for broadband fluorescence outside the working
    /// line; applies only to that channel, never to coherent signals.
    pub spectral_filter_factor: f64,
    /// Histogram bin width in seconds.
    pub bin_width: f64,
    /// Number of repeated sequences accumulated per histogram.
    pub n_sequences: u64,
    /// Sequence repetition rate in Hz (bookkeeping only).
    pub rep_rate: f64,
}

impl Default for DetectionChain {
    /// Baseline chain: 55% detector, 40% collection, 7.5x spectral filter,
    /// 256 ns bins, 15000 sequences at 50 Hz.
    fn default() -> Self {
        DetectionChain {
            eta_photodetector: 0.55,
            eta_collection: 0.40,
            spectral_filter_factor: 7.5,
            bin_width: 256e-9,
            n_sequences: 15000,
            rep_rate: 50.0,
        }
    }
}

impl DetectionChain {
    /// End-to-end detection probability for in-line photons
    /// (0.22 at defaults).
    pub fn overall_efficiency(&self) -> f64 {
        self.eta_photodetector * self.eta_collection
    }
}

/// One violated invariant found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. "timeline" or "pulses[1].tau".
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: &str) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Checks every cross-cutting invariant of a scenario and returns the
/// ordered list of violations (empty means valid). Report-style: callers
/// that need to refuse execution turn a non-empty report into an error.
pub fn validate_scenario(
    medium: &Medium,
    pulses: &[PulseEnvelope],
    timeline: &Timeline,
) -> Vec<Violation> {
    let mut out = Vec::new();

    if !(medium.alpha_l > 0.0) {
        out.push(Violation::new("medium.alpha_l", "alpha_l > 0 required"));
    }
    if !(medium.length > 0.0) {
        out.push(Violation::new("medium.length", "length > 0 required"));
    }
    if !(medium.t1 > 0.0) {
        out.push(Violation::new("medium.t1", "T1 > 0 required"));
    }
    if !(medium.t2 > 0.0) {
        out.push(Violation::new("medium.t2", "T2 > 0 required"));
    }
    if medium.t2 > 2.0 * medium.t1 {
        out.push(Violation::new("medium.t2", "T2 <= 2*T1 required"));
    }
    if medium.n_slices < 1 {
        out.push(Violation::new("medium.n_slices", "n_slices >= 1 required"));
    }
    if let InhomogeneousModel::Gaussian { width } = medium.inhomogeneous {
        if !(width > 0.0) {
            out.push(Violation::new(
                "medium.inhomogeneous",
                "gaussian line width > 0 required",
            ));
        }
    }

    if !(timeline.t1 < timeline.t2 && timeline.t2 < timeline.t3) {
        out.push(Violation::new("timeline", "t1 < t2 < t3 required"));
    }
    if timeline.t12() >= timeline.t23() {
        out.push(Violation::new("timeline", "t12 < t23 required"));
    }

    let mut last_signal_center = f64::NEG_INFINITY;
    let mut first_rephasing_center = f64::INFINITY;
    for (i, pulse) in pulses.iter().enumerate() {
        let field = |name: &str| format!("pulses[{i}].{name}");
        match &pulse.kind {
            PulseKind::GaussianSignal {
                tau,
                photon_number,
                reference_area,
            } => {
                if !(*tau > 0.0) {
                    out.push(Violation::new(&field("tau"), "tau > 0"));
                }
                if !(*photon_number >= 0.0) {
                    out.push(Violation::new(&field("photon_number"), "photon_number >= 0 required"));
                }
                if !(*reference_area > 0.0 && *reference_area <= 0.05) {
                    out.push(Violation::new(
                        &field("reference_area"),
                        "reference_area in (0, 0.05] rad required",
                    ));
                }
                last_signal_center = last_signal_center.max(pulse.t_center);
            }
            PulseKind::Chs { omega0, beta, mu } => {
                if !(*omega0 > 0.0 && *beta > 0.0 && *mu > 0.0) {
                    out.push(Violation::new(
                        &field("chs"),
                        "omega0, beta, mu > 0 required",
                    ));
                }
                first_rephasing_center = first_rephasing_center.min(pulse.t_center);
            }
            PulseKind::CustomSampled { drive } => {
                if drive.omega.is_empty() {
                    out.push(Violation::new(&field("drive"), "non-empty samples required"));
                }
            }
        }
    }
    if last_signal_center >= first_rephasing_center {
        out.push(Violation::new(
            "pulses",
            "signal pulse must precede both rephasing pulses",
        ));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline_pulses() -> Vec<PulseEnvelope> {
        let k = WaveVector::from_wavelength([0.0, 0.0, 1.0], DEFAULT_WAVELENGTH).unwrap();
        let kr = WaveVector::from_wavelength([0.0, 0.0, -1.0], DEFAULT_WAVELENGTH).unwrap();
        vec![
            PulseEnvelope {
                kind: PulseKind::GaussianSignal {
                    tau: 2e-6,
                    photon_number: 14.0,
                    reference_area: 0.02,
                },
                t_center: 0.0,
                wavevector: k,
                polarization: Polarization::Signal,
            },
            PulseEnvelope {
                kind: PulseKind::Chs {
                    omega0: 2.0 * std::f64::consts::PI * 800e3,
                    beta: 2.0 * std::f64::consts::PI * 80e3,
                    mu: 3.0,
                },
                t_center: 10e-6,
                wavevector: kr,
                polarization: Polarization::Rephasing,
            },
            PulseEnvelope {
                kind: PulseKind::Chs {
                    omega0: 2.0 * std::f64::consts::PI * 800e3,
                    beta: 2.0 * std::f64::consts::PI * 80e3,
                    mu: 3.0,
                },
                t_center: 30e-6,
                wavevector: kr,
                polarization: Polarization::Rephasing,
            },
        ]
    }

    #[test]
    fn default_scenario_is_valid() {
        let report = validate_scenario(&Medium::default(), &baseline_pulses(), &Timeline::default());
        assert!(report.is_empty(), "unexpected violations: {report:?}");
    }

    #[test]
    fn echo_times_bracket_third_pulse() {
        // Silenced echo inside the dark interval, revived echo after pulse 3.
        let tl = Timeline::default();
        assert!(tl.silenced_echo_time() < tl.t3);
        assert!(tl.revived_echo_time() > tl.t3);
        assert_relative_eq!(tl.silenced_echo_time(), 20e-6, max_relative = 1e-12);
        assert_relative_eq!(tl.revived_echo_time(), 40e-6, max_relative = 1e-12);
    }

    #[test]
    fn equal_delays_rejected() {
        // t12 = 20 µs >= t23 = 10 µs must be flagged.
        let tl = Timeline {
            t1: 0.0,
            t2: 20e-6,
            t3: 30e-6,
        };
        let report = validate_scenario(&Medium::default(), &baseline_pulses(), &tl);
        assert!(report.iter().any(|v| v.message == "t12 < t23 required"));
    }

    #[test]
    fn degenerate_tau_rejected() {
        let mut pulses = baseline_pulses();
        if let PulseKind::GaussianSignal { ref mut tau, .. } = pulses[0].kind {
            *tau = 0.0;
        }
        let report = validate_scenario(&Medium::default(), &pulses, &Timeline::default());
        assert!(report.iter().any(|v| v.message == "tau > 0"));
    }

    #[test]
    fn signal_after_rephasing_rejected() {
        let mut pulses = baseline_pulses();
        pulses[0].t_center = 15e-6;
        let report = validate_scenario(&Medium::default(), &pulses, &Timeline::default());
        assert!(report
            .iter()
            .any(|v| v.message.contains("signal pulse must precede")));
    }

    #[test]
    fn wavevector_is_normalized() {
        let k = WaveVector::new([3.0, 4.0, 0.0], 1.0).unwrap();
        let d = k.direction();
        assert_relative_eq!(d[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(d[1], 0.8, max_relative = 1e-12);
        let norm = (d[0].powi(2) + d[1].powi(2) + d[2].powi(2)).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wavevector_rejects_degenerate_input() {
        assert!(WaveVector::new([0.0, 0.0, 0.0], 1.0).is_err());
        assert!(WaveVector::new([0.0, 0.0, 1.0], 0.0).is_err());
        assert!(WaveVector::from_wavelength([1.0, 0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn overall_efficiency_at_defaults() {
        assert_relative_eq!(DetectionChain::default().overall_efficiency(), 0.22, max_relative = 1e-12);
    }

    #[test]
    fn relaxation_ordering_enforced() {
        let medium = Medium {
            t1: 10e-6,
            t2: 25e-6,
            ..Medium::default()
        };
        let report = validate_scenario(&medium, &baseline_pulses(), &Timeline::default());
        assert!(report.iter().any(|v| v.message == "T2 <= 2*T1 required"));
    }
}
