//! Background model: spontaneous emission from the population the strong
//! rephasing pulses leave in the excited state, the coherent leakage
//! transient after the last pulse, and the detection chain that maps
//! in-mode photon flux at the crystal to expected detector counts.

use serde::{Deserialize, Serialize};

use crate::dynamics::InversionProfile;
use crate::model::{DetectionChain, Medium};

/// Lumped background parameters. The excited-state fractions are
/// effective values for atoms inside the detection bandwidth; the
/// defaults reproduce bench measurements (near-complete excitation after
/// one rephasing pulse, about a third left after the second), which
/// exceed what the coherent two-pulse model alone predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Excited fraction inside the detection band after one rephasing pulse.
    pub n_e_after_one_chs: f64,
    /// Excited fraction after the second rephasing pulse.
    pub n_e_after_two_chs: f64,
    /// Photons in the coherent leakage transient after the last pulse.
    pub coherent_artifact_photons: f64,
    /// Overall scale on the spontaneous-emission flux. 1.0 uses the
    /// optically thin estimate; see [`NoiseModel::observed_anchor`].
    pub se_scale: f64,
    /// Constant stray flux at the crystal output, photons/s.
    pub stray_light: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            n_e_after_one_chs: 1.0,
            n_e_after_two_chs: 1.0 / 3.0,
            coherent_artifact_photons: 0.5,
            se_scale: 1.0,
            stray_light: 0.0,
        }
    }
}

impl NoiseModel {
    /// Thin-medium estimate of the in-mode spontaneous flux per 256 ns
    /// bin at full excitation (alpha L = 1.4, 480 kHz bandwidth).
    const THIN_ESTIMATE_PER_BIN: f64 = 1.4 * 2.0 * 480e3 * 256e-9;

    /// Bench-anchored variant: scales the spontaneous flux so a fully
    /// excited band yields 0.2 photons per 256 ns bin, the background
    /// level photon counting actually sees. The thin-medium formula
    /// overestimates by roughly 1.7x at alpha L = 1.4 because photons
    /// emitted deep in the medium are reabsorbed before exiting.
    pub fn observed_anchor() -> Self {
        NoiseModel {
            se_scale: 0.2 / Self::THIN_ESTIMATE_PER_BIN,
            ..NoiseModel::default()
        }
    }

    /// Excited fraction after `pulses_applied` rephasing pulses.
    pub fn excited_fraction_after(&self, pulses_applied: usize) -> f64 {
        match pulses_applied {
            0 => 0.0,
            1 => self.n_e_after_one_chs,
            _ => self.n_e_after_two_chs,
        }
    }
}

/// True when the optically thin spontaneous-emission estimate starts to
/// overstate the flux that actually leaves the medium.
pub fn is_optically_thick(alpha_l: f64) -> bool {
    alpha_l > 1.0
}

/// In-mode spontaneous-emission flux (photons/s at the crystal output)
/// from excited fraction n_e inside detection bandwidth `bandwidth`
/// (rad/s): alpha L * n_e * bandwidth / pi. Optically thin estimate;
/// see [`is_optically_thick`] and [`NoiseModel::observed_anchor`].
pub fn se_rate(alpha_l: f64, n_e: f64, bandwidth: f64) -> f64 {
    alpha_l * n_e * bandwidth / std::f64::consts::PI
}

/// Spontaneous-emission flux sampled at `times`: zero before the first
/// rephasing pulse, then the level set by how many pulses have fired,
/// relaxing toward the ground state with T1. Stray light adds a floor.
pub fn se_trace(
    times: &[f64],
    chs_times: &[f64],
    noise: &NoiseModel,
    medium: &Medium,
    bandwidth: f64,
) -> Vec<f64> {
    let mut sorted = chs_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    times
        .iter()
        .map(|&t| {
            let fired = sorted.iter().take_while(|&&tp| tp <= t).count();
            let flux = if fired == 0 {
                0.0
            } else {
                let since = t - sorted[fired - 1];
                let n_e = noise.excited_fraction_after(fired) * (-since / medium.t1).exp();
                noise.se_scale * se_rate(medium.alpha_l, n_e, bandwidth)
            };
            flux + noise.stray_light
        })
        .collect()
}

/// Excited fraction the coherent model itself predicts inside
/// [-band_halfwidth, +band_halfwidth], from an inversion profile:
/// after one pulse the transfer probability p, after two pulses
/// 2 p (1 - p) (transfer up then failure to return, or the reverse).
/// Real media retain more than this after two pulses, which is why
/// [`NoiseModel`] carries measured values instead.
pub fn residual_inversion(
    profile: &InversionProfile,
    band_halfwidth: f64,
    pulses_applied: usize,
) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..profile.detuning.len() {
        if profile.detuning[i].abs() <= band_halfwidth {
            let p = profile.excited_fraction(i);
            acc += match pulses_applied {
                0 => 0.0,
                1 => p,
                _ => 2.0 * p * (1.0 - p),
            };
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        acc / count as f64
    }
}

/// Coherent leakage transient after the final rephasing pulse: free
/// induction of the freshly flipped ensemble while the drive switches
/// off, modeled as a gaussian burst of width 1/beta centered 1.5/beta
/// after the pulse at `last_pulse`, carrying
/// `coherent_artifact_photons` in total. Returns flux (photons/s) at
/// `times`.
pub fn coherent_artifact(
    noise: &NoiseModel,
    last_pulse: f64,
    beta: f64,
    times: &[f64],
) -> Vec<f64> {
    let sigma = 1.0 / beta;
    let center = last_pulse + 1.5 / beta;
    let peak = noise.coherent_artifact_photons / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    times
        .iter()
        .map(|&t| {
            let u = (t - center) / sigma;
            peak * (-0.5 * u * u).exp()
        })
        .collect()
}

/// Which spectral channel a flux component travels through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralChannel {
    /// Inside the heterodyne/filter bandwidth: echo, in-mode spontaneous
    /// emission, leakage. Sees only the detector and collection losses.
    InBand,
    /// Broadband fluorescence: additionally suppressed by the spectral
    /// filter factor.
    Broadband,
}

/// Maps flux at the crystal output to expected flux at the detector.
pub fn apply_detection_chain(
    flux: &[f64],
    chain: &DetectionChain,
    channel: SpectralChannel,
) -> Vec<f64> {
    let mut factor = chain.overall_efficiency();
    if channel == SpectralChannel::Broadband {
        factor /= chain.spectral_filter_factor;
    }
    flux.iter().map(|f| f * factor).collect()
}
