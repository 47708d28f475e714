//! Complex pulse envelopes (hyperbolic-secant rephasing pulses, gaussian
//! data pulses), adiabaticity validation, and spectral-filtering analysis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adiabaticity threshold for the drive ratio omega0^2/(mu*beta^2):
/// an order of magnitude operationalizes "much greater than".
pub const R_ADIAB: f64 = 10.0;

/// Threshold for the slow-decay ratio T2*beta.
pub const R_SLOW: f64 = 10.0;

/// Envelope level below which grid truncation is considered harmless.
const TRUNCATION_LIMIT: f64 = 1e-4;

/// Uniform time grid: n samples spaced dt starting at t_start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    /// Grid covering [t_start, t_end] with the given spacing
    /// (t_end is rounded up to a whole number of samples).
    pub fn span(t_start: f64, t_end: f64, dt: f64) -> Self {
        let n = ((t_end - t_start) / dt).ceil().max(1.0) as usize + 1;
        TimeGrid { t_start, dt, n }
    }

    /// Half-step grid for a fixed-step RK4 integration with step `step`:
    /// samples at every step/2 so the integrator finds exact stage values.
    pub fn for_rk4(t_start: f64, t_end: f64, step: f64) -> Self {
        let steps = ((t_end - t_start) / step).ceil().max(1.0) as usize;
        TimeGrid {
            t_start,
            dt: step / 2.0,
            n: 2 * steps + 1,
        }
    }

    /// Time of sample i.
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.time(self.n - 1)
    }
}

/// A sampled complex Rabi drive Omega(t) on a uniform grid (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDrive {
    pub grid: TimeGrid,
    /// Complex Rabi frequency per sample, rad/s.
    pub omega: Vec<Complex64>,
}

impl SampledDrive {
    /// All-zero drive on the given grid.
    pub fn zeros(grid: TimeGrid) -> Self {
        SampledDrive {
            grid,
            omega: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    /// Largest envelope value, rad/s.
    pub fn peak(&self) -> f64 {
        self.omega.iter().map(|o| o.norm()).fold(0.0, f64::max)
    }

    /// Envelope area integral of |Omega(t)| dt by trapezoid rule (radians).
    pub fn area(&self) -> f64 {
        let mut acc = 0.0;
        for pair in self.omega.windows(2) {
            acc += 0.5 * (pair[0].norm() + pair[1].norm()) * self.grid.dt;
        }
        acc
    }
}

/// Numerically stable sech built from decaying exponentials only.
fn sech(x: f64) -> f64 {
    let ax = x.abs();
    2.0 * (-ax).exp() / (1.0 + (-2.0 * ax).exp())
}

/// Numerically stable ln cosh(x) = |x| + ln(1 + e^(-2|x|)) - ln 2.
fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Complex hyperbolic-secant drive at one instant:
/// Omega0 * sech(beta*(t-t0)) * exp(i*mu*ln cosh(beta*(t-t0))).
///
/// The phase convention makes the instantaneous detuning (phase
/// derivative) equal +mu*beta*tanh(beta*(t-t0)), sweeping from -mu*beta
/// to +mu*beta across the pulse.
pub fn chs_drive_at(omega0: f64, beta: f64, mu: f64, t0: f64, t: f64) -> Complex64 {
    let x = beta * (t - t0);
    Complex64::from_polar(omega0 * sech(x), mu * ln_cosh(x))
}

/// Real gaussian drive at one instant for a signal of field-amplitude
/// duration tau (intensity profile exp(-(t-t0)^2/tau^2)) and total pulse
/// area `area`: peak Rabi frequency area/(tau*sqrt(2*pi)).
pub fn gaussian_drive_at(tau: f64, area: f64, t0: f64, t: f64) -> f64 {
    let u = (t - t0) / tau;
    area / (tau * (2.0 * std::f64::consts::PI).sqrt()) * (-0.5 * u * u).exp()
}

/// Builds a complex hyperbolic-secant rephasing pulse on `grid`.
///
/// Errors when the grid cuts the envelope off above 1e-4 of its peak
/// (sech decays slowly: the grid must reach roughly t0 +- 10/beta).
pub fn make_chs(omega0: f64, beta: f64, mu: f64, t0: f64, grid: TimeGrid) -> Result<SampledDrive> {
    if !(omega0 > 0.0 && beta > 0.0 && mu > 0.0) {
        return Err(Error::InvalidScenario(
            "chs parameters omega0, beta, mu must be positive".into(),
        ));
    }
    let edge = sech(beta * (grid.t_start - t0)).max(sech(beta * (grid.t_end() - t0)));
    if edge > TRUNCATION_LIMIT {
        return Err(Error::GridTooShort(edge));
    }
    let omega = (0..grid.n)
        .map(|i| chs_drive_at(omega0, beta, mu, t0, grid.time(i)))
        .collect();
    Ok(SampledDrive { grid, omega })
}

/// Builds a weak gaussian data pulse on `grid`.
///
/// The drive amplitude is set by `reference_area` alone (kept at or below
/// 0.05 rad so the ensemble responds linearly); `photon_number` is
/// accepted here only to validate it as metadata, and never changes the
/// envelope. Detection-side scaling applies photon numbers downstream.
pub fn make_gaussian_signal(
    tau: f64,
    photon_number: f64,
    t_center: f64,
    reference_area: f64,
    grid: TimeGrid,
) -> Result<SampledDrive> {
    if !(tau > 0.0) {
        return Err(Error::InvalidScenario("gaussian tau must be positive".into()));
    }
    if !(photon_number >= 0.0) {
        return Err(Error::InvalidScenario("photon_number must be >= 0".into()));
    }
    if !(reference_area > 0.0) {
        return Err(Error::InvalidScenario("reference_area must be positive".into()));
    }
    if reference_area > 0.05 {
        return Err(Error::AreaTooLarge(reference_area));
    }
    let edge_u = ((grid.t_start - t_center) / tau)
        .abs()
        .min(((grid.t_end() - t_center) / tau).abs());
    let edge = (-0.5 * edge_u * edge_u).exp();
    if edge > TRUNCATION_LIMIT {
        return Err(Error::GridTooShort(edge));
    }
    let omega = (0..grid.n)
        .map(|i| Complex64::new(gaussian_drive_at(tau, reference_area, t_center, grid.time(i)), 0.0))
        .collect();
    Ok(SampledDrive { grid, omega })
}

/// Duration (FWHM of the intensity profile exp(-t^2/tau^2)) in seconds.
pub fn gaussian_intensity_fwhm(tau: f64) -> f64 {
    2.0 * tau * f64::ln(2.0).sqrt()
}

/// FWHM of the intensity spectrum of the same gaussian, in Hz:
/// 2*sqrt(ln 2)/(pi*tau). At tau = 2 µs this is about 265 kHz, well
/// inside the 480 kHz rephasing bandwidth.
pub fn gaussian_intensity_spectrum_fwhm(tau: f64) -> f64 {
    2.0 * f64::ln(2.0).sqrt() / (std::f64::consts::PI * tau)
}

/// Pass/fail report of the three adiabatic-inversion constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    /// mu/2; the chirp must satisfy mu > 2.
    pub mu_ratio: f64,
    /// omega0^2/(mu*beta^2); must reach [`R_ADIAB`].
    pub drive_ratio: f64,
    /// T2*beta; must reach [`R_SLOW`] so decay is slow on the sweep scale.
    pub decay_ratio: f64,
    pub pass: bool,
    /// Human-readable description of each violated constraint.
    pub failures: Vec<String>,
}

/// Checks the chirped-pulse inversion constraints: mu > 2,
/// omega0^2 >= R_adiab * mu * beta^2, and T2*beta >= R_slow.
pub fn validate_adiabatic(omega0: f64, beta: f64, mu: f64, t2: f64) -> AdiabaticReport {
    let mu_ratio = mu / 2.0;
    let drive_ratio = omega0 * omega0 / (mu * beta * beta);
    let decay_ratio = t2 * beta;
    let mut failures = Vec::new();
    if mu_ratio <= 1.0 {
        failures.push(format!("mu > 2 violated (mu = {mu})"));
    }
    if drive_ratio < R_ADIAB {
        failures.push(format!(
            "adiabaticity omega0^2/(mu*beta^2) = {drive_ratio:.2} below {R_ADIAB}"
        ));
    }
    if decay_ratio < R_SLOW {
        failures.push(format!("T2*beta = {decay_ratio:.2} below {R_SLOW}"));
    }
    AdiabaticReport {
        mu_ratio,
        drive_ratio,
        decay_ratio,
        pass: failures.is_empty(),
        failures,
    }
}

/// Result of pushing a gaussian pulse through a rectangular spectral gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterAnalysis {
    /// Output rms duration / input rms duration, both measured over the
    /// +-5*tau analysis window.
    pub stretch_factor: f64,
    /// Transmitted fraction of the pulse energy (spectral-domain ratio).
    pub energy_fraction: f64,
}

/// Number of Simpson intervals for the spectral quadratures below.
const FILTER_QUAD_INTERVALS: usize = 4000;

/// Simpson integral of f over [0, hi] with FILTER_QUAD_INTERVALS panels.
fn simpson<F: Fn(f64) -> f64>(hi: f64, f: F) -> f64 {
    let n = FILTER_QUAD_INTERVALS;
    let h = hi / n as f64;
    let mut acc = f(0.0) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Propagates a gaussian signal (intensity exp(-t^2/tau^2)) through an
/// ideal rectangular spectral gate of the given half-width and reports
/// the pulse stretching and the transmitted energy fraction.
///
/// Conventions, chosen because a sharply gated spectrum has slowly
/// decaying time-domain tails whose rms width diverges with the window:
/// rms durations are measured over a fixed +-5*tau window (which contains
/// the full input pulse), while the energy fraction is computed in the
/// spectral domain where it is window-free. Frequencies beyond 8/tau
/// carry less than 1e-27 of the energy, so a gate at least that wide is
/// numerically no gate at all and returns exactly (1.0, 1.0).
pub fn filtered_pulse_analysis(tau: f64, band_halfwidth: f64) -> FilterAnalysis {
    assert!(tau > 0.0 && band_halfwidth > 0.0, "tau and band halfwidth must be positive");
    let omega_max = 8.0 / tau;
    let w_eff = band_halfwidth.min(omega_max);

    // Field spectrum of the input is exp(-w^2*tau^2/2); energy spectrum
    // is its square. Transmitted / total energy.
    let energy_in = simpson(omega_max, |w| (-(w * tau).powi(2)).exp());
    let energy_out = simpson(w_eff, |w| (-(w * tau).powi(2)).exp());
    let energy_fraction = energy_out / energy_in;

    // Time-domain field by cosine transform of the gated spectrum,
    // evaluated on [0, 5*tau] and mirrored (the field is even in t).
    let n_t = 320;
    let dt = 5.0 * tau / n_t as f64;
    let field = |gate: f64, t: f64| simpson(gate, |w| (-0.5 * (w * tau).powi(2)).exp() * (w * t).cos());
    let mut num_out = 0.0;
    let mut den_out = 0.0;
    let mut num_in = 0.0;
    let mut den_in = 0.0;
    for i in 0..=n_t {
        let t = i as f64 * dt;
        let weight = if i == 0 { 1.0 } else { 2.0 };
        let fo = field(w_eff, t);
        let fi = field(omega_max, t);
        num_out += weight * t * t * fo * fo;
        den_out += weight * fo * fo;
        num_in += weight * t * t * fi * fi;
        den_in += weight * fi * fi;
    }
    let stretch_factor = ((num_out / den_out) / (num_in / den_in)).sqrt();

    FilterAnalysis {
        stretch_factor,
        energy_fraction,
    }
}
