//! Wavevector bookkeeping: where each echo is emitted and whether the
//! accumulated phase mismatch across the medium lets it radiate.

use serde::{Deserialize, Serialize};

use crate::model::WaveVector;

/// Largest |mismatch| classified as freely emitted, radians.
pub const EMIT_LIMIT: f64 = std::f64::consts::PI / 10.0;

/// Smallest |mismatch| classified as silenced, radians.
pub const SILENCE_LIMIT: f64 = std::f64::consts::PI;

/// Echo wavevector after a signal k1 and one rephasing pulse k2:
/// k_e = 2*k2 - k1. Its magnitude generally differs from the optical k,
/// which is what suppresses emission in non-collinear geometries.
pub fn echo_wavevector_standard(k1: &WaveVector, k2: &WaveVector) -> [f64; 3] {
    let a = k1.vector();
    let b = k2.vector();
    [2.0 * b[0] - a[0], 2.0 * b[1] - a[1], 2.0 * b[2] - a[2]]
}

/// Echo wavevector after a signal k1 and two rephasing pulses k2, k3:
/// k_e = k1 + 2*(k3 - k2). When the two rephasing beams share a
/// direction this collapses to k1 regardless of their orientation,
/// which is why the doubly rephased echo radiates even for
/// counterpropagating rephasing beams.
pub fn echo_wavevector_revived(k1: &WaveVector, k2: &WaveVector, k3: &WaveVector) -> [f64; 3] {
    let a = k1.vector();
    let b = k2.vector();
    let c = k3.vector();
    [
        a[0] + 2.0 * (c[0] - b[0]),
        a[1] + 2.0 * (c[1] - b[1]),
        a[2] + 2.0 * (c[2] - b[2]),
    ]
}

/// Phase slip accumulated across a medium of the given length when an
/// echo is forced onto wavevector `k_echo` while light of the medium
/// propagates with magnitude `k_magnitude`: (|k_echo| - k) * length.
pub fn phase_mismatch(k_echo: [f64; 3], k_magnitude: f64, length: f64) -> f64 {
    let norm = (k_echo[0] * k_echo[0] + k_echo[1] * k_echo[1] + k_echo[2] * k_echo[2]).sqrt();
    (norm - k_magnitude) * length
}

/// Emission regime of an echo given its phase mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// |mismatch| < pi/10: the medium radiates essentially freely.
    Emitted,
    /// |mismatch| >= pi: destructive interference across the medium
    /// suppresses the macroscopic field.
    Silenced,
    /// In between: neither approximation holds; treat as a design error.
    Marginal,
}

/// Classification of one echo's ability to radiate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// Accumulated phase slip across the medium, radians (signed).
    pub mismatch_rad: f64,
    pub regime: Regime,
}

impl MatchReport {
    pub fn is_emitted(&self) -> bool {
        self.regime == Regime::Emitted
    }
}

/// Classifies an echo wavevector against the medium's optical k and
/// length. The boundary mismatch of exactly pi counts as silenced.
pub fn classify(k_echo: [f64; 3], k_magnitude: f64, length: f64) -> MatchReport {
    let mismatch_rad = phase_mismatch(k_echo, k_magnitude, length);
    let mag = mismatch_rad.abs();
    let regime = if mag < EMIT_LIMIT {
        Regime::Emitted
    } else if mag >= SILENCE_LIMIT {
        Regime::Silenced
    } else {
        Regime::Marginal
    };
    MatchReport { mismatch_rad, regime }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_WAVELENGTH;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const LENGTH: f64 = 8e-3;

    fn k() -> f64 {
        2.0 * PI / DEFAULT_WAVELENGTH
    }

    fn along(direction: [f64; 3]) -> WaveVector {
        WaveVector::new(direction, k()).expect("unit direction")
    }

    fn tilted(angle: f64, sign: f64) -> WaveVector {
        along([angle.sin(), 0.0, sign * angle.cos()])
    }

    #[test]
    fn collinear_single_rephasing_echo_is_emitted() {
        let k1 = along([0.0, 0.0, 1.0]);
        let echo = echo_wavevector_standard(&k1, &k1);
        let report = classify(echo, k(), LENGTH);
        assert!(report.mismatch_rad.abs() < 1e-9);
        assert_eq!(report.regime, Regime::Emitted);
    }

    #[test]
    fn counterpropagating_single_rephasing_echo_is_silenced() {
        // |2*k2 - k1| = 3k for opposed beams, so the slip is 2kL, a
        // colossal 1.27e5 radians over 8 mm at 793 nm.
        let k1 = along([0.0, 0.0, 1.0]);
        let k2 = along([0.0, 0.0, -1.0]);
        let echo = echo_wavevector_standard(&k1, &k2);
        let report = classify(echo, k(), LENGTH);
        assert_relative_eq!(report.mismatch_rad, 2.0 * k() * LENGTH, max_relative = 1e-12);
        assert_relative_eq!(report.mismatch_rad, 1.2677e5, max_relative = 1e-4);
        assert_eq!(report.regime, Regime::Silenced);
    }

    #[test]
    fn ten_milliradian_beam_angle_silences_single_rephasing_echo() {
        // Nearly collinear beams: |2*k2 - k1| = k*sqrt(5 - 4*cos(angle)),
        // so even 10 mrad accumulates ~6.3 rad of slip over 8 mm.
        let k1 = along([0.0, 0.0, 1.0]);
        let k2 = tilted(10e-3, 1.0);
        let echo = echo_wavevector_standard(&k1, &k2);
        let report = classify(echo, k(), LENGTH);
        let expected = k() * ((5.0 - 4.0 * (10e-3_f64).cos()).sqrt() - 1.0) * LENGTH;
        assert_relative_eq!(report.mismatch_rad, expected, max_relative = 1e-12);
        assert_relative_eq!(report.mismatch_rad, 6.3386, max_relative = 1e-3);
        assert_eq!(report.regime, Regime::Silenced);
    }

    #[test]
    fn counterpropagating_double_rephasing_echo_is_emitted() {
        // Both rephasing beams opposed to the signal: k_e collapses to k1.
        let k1 = along([0.0, 0.0, 1.0]);
        let k23 = along([0.0, 0.0, -1.0]);
        let echo = echo_wavevector_revived(&k1, &k23, &k23);
        let report = classify(echo, k(), LENGTH);
        assert!(report.mismatch_rad.abs() < 1e-9);
        assert_eq!(report.regime, Regime::Emitted);
        assert!(report.is_emitted());
    }

    #[test]
    fn misaligned_double_rephasing_beams_lose_the_echo() {
        // A 10 mrad angle between the two rephasing beams breaks the
        // cancellation: |k1 + 2*(k3 - k2)| = k*sqrt(13 - 12*cos(angle)).
        let k1 = along([0.0, 0.0, 1.0]);
        let k2 = along([0.0, 0.0, -1.0]);
        let k3 = tilted(10e-3, -1.0);
        let echo = echo_wavevector_revived(&k1, &k2, &k3);
        let report = classify(echo, k(), LENGTH);
        let expected = k() * ((13.0 - 12.0 * (10e-3_f64).cos()).sqrt() - 1.0) * LENGTH;
        assert_relative_eq!(report.mismatch_rad, expected, max_relative = 1e-9);
        assert!(report.mismatch_rad > SILENCE_LIMIT);
        assert_eq!(report.regime, Regime::Silenced);
    }

    #[test]
    fn small_angles_fall_in_the_marginal_gap() {
        // Collinear-ish single rephasing at 4 mrad: slip ~ k*L*angle^2,
        // about 1.0 rad, between the emit and silence limits.
        let k1 = along([0.0, 0.0, 1.0]);
        let k2 = tilted(4e-3, 1.0);
        let echo = echo_wavevector_standard(&k1, &k2);
        let report = classify(echo, k(), LENGTH);
        assert!(report.mismatch_rad > EMIT_LIMIT && report.mismatch_rad < SILENCE_LIMIT);
        assert_eq!(report.regime, Regime::Marginal);
    }

    #[test]
    fn classification_boundaries() {
        // Mismatch is (|k_echo| - k)*L; pick |k_echo| to land just around
        // each boundary. Exactly-pi belongs to the silenced side.
        let at = |mismatch: f64| classify([0.0, 0.0, 1.0 + mismatch], 1.0, 1.0).regime;
        assert_eq!(at(PI * (1.0 + 1e-9)), Regime::Silenced);
        assert_eq!(at(PI * (1.0 - 1e-9)), Regime::Marginal);
        assert_eq!(at(EMIT_LIMIT * (1.0 + 1e-9)), Regime::Marginal);
        assert_eq!(at(EMIT_LIMIT * (1.0 - 1e-9)), Regime::Emitted);
        // Sign does not matter.
        assert_eq!(at(-PI * 2.0), Regime::Silenced);
    }
}
