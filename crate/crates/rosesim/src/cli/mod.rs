//! Scenario plumbing: the fully resolved run description, config
//! parsing with explicit units, and the batch pipelines behind the
//! command-line subcommands.

pub mod config;
pub mod runner;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    DetectionChain, Medium, Polarization, PulseEnvelope, PulseKind, Timeline, WaveVector,
    DEFAULT_WAVELENGTH,
};
use crate::noise::NoiseModel;
use crate::phasematch::{classify, echo_wavevector_revived, echo_wavevector_standard, MatchReport};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Weak gaussian data pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Field duration: intensity profile exp(-(t-t1)^2/tau^2), seconds.
    pub tau: f64,
    /// Mean photons entering the crystal per sequence.
    pub photon_number: f64,
    /// Pulse area used for the linear-response run, radians.
    pub reference_area: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            tau: 2e-6,
            photon_number: 14.0,
            reference_area: 0.02,
        }
    }
}

/// Chirped rephasing pulse parameters, shared by both strong pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RephasingSpec {
    /// Peak Rabi frequency, rad/s.
    pub omega0: f64,
    /// Sweep rate, rad/s.
    pub beta: f64,
    /// Chirp parameter (dimensionless; inversion band is +-mu*beta).
    pub mu: f64,
    /// Number of rephasing pulses fired: 1 leaves the first echo
    /// silenced, 2 revives it.
    pub count: usize,
}

impl Default for RephasingSpec {
    fn default() -> Self {
        RephasingSpec {
            omega0: TWO_PI * 800e3,
            beta: TWO_PI * 80e3,
            mu: 3.0,
            count: 2,
        }
    }
}

impl RephasingSpec {
    /// Full detection/inversion bandwidth 2*mu*beta, rad/s.
    pub fn bandwidth(&self) -> f64 {
        2.0 * self.mu * self.beta
    }
}

/// Beam directions and the optical wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub signal_direction: [f64; 3],
    /// Direction shared by both rephasing beams.
    pub rephasing_direction: [f64; 3],
    pub wavelength: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            signal_direction: [0.0, 0.0, 1.0],
            rephasing_direction: [0.0, 0.0, -1.0],
            wavelength: DEFAULT_WAVELENGTH,
        }
    }
}

/// Numerical controls and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    /// Full simulated detuning span, rad/s.
    pub detuning_span: f64,
    pub detuning_points: usize,
    /// Integrator step override, seconds; `None` = automatic.
    pub dt: Option<f64>,
    /// Trajectory output spacing, seconds.
    pub output_interval: f64,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            detuning_span: TWO_PI * 3e6,
            detuning_points: 401,
            dt: None,
            output_interval: 64e-9,
            seed: 0x524F5345,
        }
    }
}

/// A fully resolved run description in SI units. This is what metrics
/// records embed for provenance; running the same scenario twice gives
/// bit-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub medium: Medium,
    pub timeline: Timeline,
    pub signal: SignalSpec,
    pub rephasing: RephasingSpec,
    pub geometry: GeometrySpec,
    pub detection: DetectionChain,
    pub noise: NoiseModel,
    pub simulation: SimulationSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::baseline()
    }
}

impl Scenario {
    /// The bench-default scenario every pipeline starts from: 14-photon
    /// 2 µs signal, counterpropagating 800 kHz / 80 kHz / mu = 3
    /// rephasing pulses at 10 and 30 µs, alpha L = 1.4, anchored noise.
    pub fn baseline() -> Self {
        Scenario {
            medium: Medium::default(),
            timeline: Timeline::default(),
            signal: SignalSpec::default(),
            rephasing: RephasingSpec::default(),
            geometry: GeometrySpec::default(),
            detection: DetectionChain::default(),
            noise: NoiseModel::observed_anchor(),
            simulation: SimulationSpec::default(),
        }
    }

    /// Optical wavevector magnitude in the medium, rad/m.
    pub fn k_magnitude(&self) -> f64 {
        TWO_PI / self.geometry.wavelength
    }

    fn wavevector(&self, direction: [f64; 3]) -> Result<WaveVector> {
        WaveVector::new(direction, self.k_magnitude())
            .map_err(|e| Error::Config(format!("geometry: {e}")))
    }

    /// Builds the pulse train: the signal at t1 and `rephasing.count`
    /// chirped pulses at t2 (and t3).
    pub fn pulses(&self) -> Result<Vec<PulseEnvelope>> {
        if !(1..=2).contains(&self.rephasing.count) {
            return Err(Error::Config(format!(
                "rephasing: count must be 1 or 2, got {}",
                self.rephasing.count
            )));
        }
        let k_sig = self.wavevector(self.geometry.signal_direction)?;
        let k_reph = self.wavevector(self.geometry.rephasing_direction)?;
        let chs = PulseKind::Chs {
            omega0: self.rephasing.omega0,
            beta: self.rephasing.beta,
            mu: self.rephasing.mu,
        };
        let mut pulses = vec![
            PulseEnvelope {
                kind: PulseKind::GaussianSignal {
                    tau: self.signal.tau,
                    photon_number: self.signal.photon_number,
                    reference_area: self.signal.reference_area,
                },
                t_center: self.timeline.t1,
                wavevector: k_sig,
                polarization: Polarization::Signal,
            },
            PulseEnvelope {
                kind: chs.clone(),
                t_center: self.timeline.t2,
                wavevector: k_reph,
                polarization: Polarization::Rephasing,
            },
        ];
        if self.rephasing.count == 2 {
            pulses.push(PulseEnvelope {
                kind: chs,
                t_center: self.timeline.t3,
                wavevector: k_reph,
                polarization: Polarization::Rephasing,
            });
        }
        Ok(pulses)
    }

    /// Time of the last rephasing pulse that actually fires.
    pub fn last_rephasing_time(&self) -> f64 {
        if self.rephasing.count == 2 {
            self.timeline.t3
        } else {
            self.timeline.t2
        }
    }

    /// Where this scenario's echo would appear.
    pub fn echo_time(&self) -> f64 {
        if self.rephasing.count == 2 {
            self.timeline.revived_echo_time()
        } else {
            self.timeline.silenced_echo_time()
        }
    }

    /// Echo wavevector and its phase-match classification for this
    /// scenario's geometry and pulse count.
    pub fn echo_report(&self) -> Result<([f64; 3], MatchReport)> {
        let k1 = self.wavevector(self.geometry.signal_direction)?;
        let k2 = self.wavevector(self.geometry.rephasing_direction)?;
        let k_echo = if self.rephasing.count == 2 {
            echo_wavevector_revived(&k1, &k2, &k2)
        } else {
            echo_wavevector_standard(&k1, &k2)
        };
        Ok((k_echo, classify(k_echo, self.k_magnitude(), self.medium.length)))
    }

    /// Ensemble simulation controls for `run_protocol`.
    pub fn sim_params(&self) -> crate::dynamics::SimParams {
        crate::dynamics::SimParams {
            detuning_span: self.simulation.detuning_span,
            detuning_points: self.simulation.detuning_points,
            dt: self.simulation.dt,
            t_start: None,
            t_end: None,
            output_interval: self.simulation.output_interval,
        }
    }
}
