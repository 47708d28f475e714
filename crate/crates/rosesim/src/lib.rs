//! Simulator for photon-echo storage of weak light in an
//! inhomogeneously broadened two-level ensemble.
//!
//! A faint gaussian signal pulse is absorbed by the ensemble; one or
//! two chirped hyperbolic-secant rephasing pulses invert the atoms and
//! schedule echoes. Propagation geometry decides which echoes can
//! radiate, an optical-depth slice model sets the released energy, and
//! a detector model turns crystal-side photon flux into Poisson count
//! histograms with matched-filter mode read-outs.
//!
//! Module map:
//! - [`model`]: media, timelines, pulse descriptors, detector chain.
//! - [`pulses`]: drive synthesis, adiabaticity checks, filter analysis.
//! - [`phasematch`]: echo wavevector algebra and emission regimes.
//! - [`dynamics`]: optical Bloch integration and echo energetics.
//! - [`noise`]: spontaneous-emission background and coherent transient.
//! - [`counting`]: Poisson counting and temporal-mode extraction.
//! - [`cli`]: scenarios, config parsing, and batch pipelines.

pub mod cli;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod noise;
pub mod phasematch;
pub mod pulses;

pub use cli::config::parse_config_str;
pub use cli::runner::{
    read_counts, reproduce_fig4, run_reproduce_fig4, run_reproduce_fig5, run_simulate,
    simulate_scenario, Fig4Variant,
};
pub use cli::Scenario;
pub use error::{Error, Result};
pub use model::{DetectionChain, Medium, PulseEnvelope, Timeline, WaveVector};
pub use phasematch::{classify, MatchReport, Regime};
