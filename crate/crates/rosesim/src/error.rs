//! Error type shared across the simulator.

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or operation argument violates a documented precondition.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Wavevector magnitudes must agree to 1e-9 relative for echo algebra.
    #[error("wavevector magnitudes differ beyond 1e-9 relative: {0:.6e} vs {1:.6e} rad/m")]
    MagnitudeMismatch(f64, f64),

    /// The integrator step does not resolve the fastest rate in the problem.
    #[error(
        "time step {dt:.3e} s too coarse for rate {rate:.3e} rad/s \
         (dt*rate = {product:.3} exceeds the 0.02 budget)"
    )]
    StepSize { dt: f64, rate: f64, product: f64 },

    /// Drives must be sampled at half-steps of the integrator grid.
    #[error(
        "drive sample spacing {found:.3e} s does not match half the \
         integrator step ({expected:.3e} s expected)"
    )]
    DriveGridMismatch { found: f64, expected: f64 },

    /// The integrator produced a non-finite state (blow-up guard).
    #[error("non-finite state during integration at detuning {0:.3e} rad/s")]
    NonFinite(f64),

    /// A pulse envelope is cut off by its time grid.
    #[error("grid too short: envelope truncated at {0:.2e} of peak (limit 1e-4)")]
    GridTooShort(f64),

    /// Weak-signal linear response requires a small pulse area.
    #[error("pulse area {0:.3} rad exceeds the 0.05 rad linear-response cap")]
    AreaTooLarge(f64),

    /// Phase mismatch falls between the emitted and silenced thresholds.
    #[error("marginal phase matching (|mismatch| = {0:.3} rad); refusing to guess partial emission")]
    MarginalPhaseMatch(f64),

    /// Attempted to normalize an already-normalized histogram.
    #[error("histogram is already normalized to photons per sequence")]
    AlreadyNormalized,

    /// Operation requires a histogram normalized to photons per sequence.
    #[error("histogram holds raw detected counts; normalize to photons per sequence first")]
    NotNormalized,

    /// The extraction mode does not fit inside the histogram time range.
    #[error("gaussian mode centered at {center:.3e} s extends beyond the histogram range")]
    ModeOutsideHistogram { center: f64 },

    /// Signal-to-noise is undefined without background.
    #[error("background is zero or negative; SNR undefined")]
    ZeroBackground,

    /// Configuration file problem (syntax, units, unknown fields).
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Module whose precondition failed, for error surfacing on the
    /// command line.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidScenario(_) => "model",
            Error::MagnitudeMismatch(..) | Error::MarginalPhaseMatch(_) => "phasematch",
            Error::StepSize { .. }
            | Error::DriveGridMismatch { .. }
            | Error::NonFinite(_) => "dynamics",
            Error::GridTooShort(_) | Error::AreaTooLarge(_) => "pulses",
            Error::AlreadyNormalized
            | Error::NotNormalized
            | Error::ModeOutsideHistogram { .. }
            | Error::ZeroBackground => "counting",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
