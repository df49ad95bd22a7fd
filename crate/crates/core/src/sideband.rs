//! Quadrature bookkeeping for dual-carrier balanced heterodyne readout.
//!
//! Two interferometers are probed by carriers at `ω₀ − Δ` (lower) and
//! `ω₀ + Δ` (upper). Beating against a local oscillator at `ω₀` and
//! demodulating at `Δ` yields an in-phase current carrying the sum (or
//! difference) of the amplitude quadratures and an in-quadrature current
//! carrying the difference (or sum) of the phase quadratures.
//!
//! All amplitudes are vacuum-normalised: a vacuum quadrature has unit
//! variance.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude (`x1`) and phase (`x2`) quadratures of the two signal carriers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeQuadratures {
    pub x1_lower: f64,
    pub x2_lower: f64,
    pub x1_upper: f64,
    pub x2_upper: f64,
}

/// Quadratures of the injected two-mode squeezed field, one mode per carrier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SqueezeModeQuadratures {
    pub s1_lower: f64,
    pub s2_lower: f64,
    pub s1_upper: f64,
    pub s2_upper: f64,
}

/// Rotates a quadrature pair by `angle`: `(x1, x2) -> (c·x1 − s·x2, s·x1 + c·x2)`.
#[inline]
pub fn rotate_pair(x1: f64, x2: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * x1 - s * x2, s * x1 + c * x2)
}

impl ModeQuadratures {
    pub fn new(x1_lower: f64, x2_lower: f64, x1_upper: f64, x2_upper: f64) -> Result<Self> {
        let q = ModeQuadratures { x1_lower, x2_lower, x1_upper, x2_upper };
        if q.to_array().iter().all(|v| v.is_finite()) {
            Ok(q)
        } else {
            Err(Error::InvalidInput(format!("non-finite quadrature in {q:?}")))
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1_lower, self.x2_lower, self.x1_upper, self.x2_upper]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        ModeQuadratures { x1_lower: a[0], x2_lower: a[1], x1_upper: a[2], x2_upper: a[3] }
    }

    pub fn lower_norm_sqr(&self) -> f64 {
        self.x1_lower * self.x1_lower + self.x2_lower * self.x2_lower
    }

    pub fn upper_norm_sqr(&self) -> f64 {
        self.x1_upper * self.x1_upper + self.x2_upper * self.x2_upper
    }
}

impl Add for ModeQuadratures {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (self.to_array(), rhs.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Mul<f64> for ModeQuadratures {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * k))
    }
}

impl SqueezeModeQuadratures {
    pub fn new(s1_lower: f64, s2_lower: f64, s1_upper: f64, s2_upper: f64) -> Result<Self> {
        let s = SqueezeModeQuadratures { s1_lower, s2_lower, s1_upper, s2_upper };
        if s.to_array().iter().all(|v| v.is_finite()) {
            Ok(s)
        } else {
            Err(Error::InvalidInput(format!("non-finite quadrature in {s:?}")))
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s1_lower, self.s2_lower, self.s1_upper, self.s2_upper]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        SqueezeModeQuadratures { s1_lower: a[0], s2_lower: a[1], s1_upper: a[2], s2_upper: a[3] }
    }

    /// Rotates both modes by the same angle (squeeze-angle convention).
    pub fn rotated(self, angle: f64) -> Self {
        let (s1l, s2l) = rotate_pair(self.s1_lower, self.s2_lower, angle);
        let (s1u, s2u) = rotate_pair(self.s1_upper, self.s2_upper, angle);
        SqueezeModeQuadratures { s1_lower: s1l, s2_lower: s2l, s1_upper: s1u, s2_upper: s2u }
    }

    /// Amplitude-sum combination `S₁⁻ + S₁⁺`; its half-variance is `V₋` for an aligned state.
    pub fn amplitude_sum(&self) -> f64 {
        self.s1_lower + self.s1_upper
    }

    /// Amplitude-difference combination `S₁⁻ − S₁⁺`; its half-variance is `V₊`.
    pub fn amplitude_diff(&self) -> f64 {
        self.s1_lower - self.s1_upper
    }
}

impl Add for SqueezeModeQuadratures {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (self.to_array(), rhs.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Sub for SqueezeModeQuadratures {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (self.to_array(), rhs.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] - b[i]))
    }
}

/// Readout phases: LO phase, relative carrier phase and squeeze angle.
///
/// Angles are stored reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSettings {
    #[serde(default)]
    pub theta_lo: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub theta_sq: f64,
}

fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PhaseSettings {
    pub fn new(theta_lo: f64, phi: f64, theta_sq: f64) -> Result<Self> {
        for (name, v) in [("theta_lo", theta_lo), ("phi", phi), ("theta_sq", theta_sq)] {
            if !v.is_finite() {
                return Err(Error::param(name, v, "phase must be finite"));
            }
        }
        Ok(PhaseSettings {
            theta_lo: reduce_angle(theta_lo),
            phi: reduce_angle(phi),
            theta_sq: reduce_angle(theta_sq),
        })
    }

    /// Sum-readout settings (`θ_LO = 0`, `φ = 0`) with the given squeeze angle.
    pub fn sum(theta_sq: f64) -> Self {
        PhaseSettings::new(0.0, 0.0, theta_sq).expect("finite")
    }

    /// Difference-readout settings (`θ_LO = 0`, `φ = π`).
    pub fn difference(theta_sq: f64) -> Self {
        PhaseSettings::new(0.0, std::f64::consts::PI, theta_sq).expect("finite")
    }

    /// Re-reduces the stored angles, e.g. after deserialisation.
    pub fn normalized(self) -> Result<Self> {
        PhaseSettings::new(self.theta_lo, self.phi, self.theta_sq)
    }
}

/// Demodulated in-phase and in-quadrature photocurrent amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DemodulatedPair {
    pub i_inphase: f64,
    pub i_quadrature: f64,
}

impl Add for DemodulatedPair {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        DemodulatedPair {
            i_inphase: self.i_inphase + rhs.i_inphase,
            i_quadrature: self.i_quadrature + rhs.i_quadrature,
        }
    }
}

/// Carrier frequency plan. `omega0` is informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierLayout {
    /// Optical carrier angular frequency, rad/s.
    #[serde(default = "CarrierLayout::default_omega0")]
    pub omega0: f64,
    /// Heterodyne offset Δ, Hz.
    #[serde(default = "CarrierLayout::default_delta")]
    pub delta: f64,
    /// Audio-band signal frequency Ω, Hz.
    #[serde(default = "CarrierLayout::default_signal_freq")]
    pub signal_freq: f64,
}

impl CarrierLayout {
    fn default_omega0() -> f64 {
        // 1064 nm
        TAU * 299_792_458.0 / 1064e-9
    }
    fn default_delta() -> f64 {
        425e6
    }
    fn default_signal_freq() -> f64 {
        25e3
    }

    pub fn new(delta: f64, signal_freq: f64) -> Result<Self> {
        let c = CarrierLayout { omega0: Self::default_omega0(), delta, signal_freq };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", self.delta, "must be positive"));
        }
        if !(self.signal_freq > 0.0 && self.signal_freq.is_finite()) {
            return Err(Error::param("signal_freq", self.signal_freq, "must be positive"));
        }
        if self.signal_freq > 1e-2 * self.delta {
            return Err(Error::param(
                "signal_freq",
                self.signal_freq,
                "must be far below the heterodyne offset",
            ));
        }
        Ok(())
    }
}

impl Default for CarrierLayout {
    fn default() -> Self {
        CarrierLayout {
            omega0: Self::default_omega0(),
            delta: Self::default_delta(),
            signal_freq: Self::default_signal_freq(),
        }
    }
}

/// Expresses the signal quadratures in the readout basis set by `θ_LO` and `φ`.
///
/// The lower carrier is rotated by `θ_LO` and the upper carrier by `φ − θ_LO`.
/// Each rotation is orthogonal, so the per-carrier quadrature norm is kept.
pub fn rotate_readout(q: ModeQuadratures, phases: PhaseSettings) -> ModeQuadratures {
    let (x1l, x2l) = rotate_pair(q.x1_lower, q.x2_lower, phases.theta_lo);
    let (x1u, x2u) = rotate_pair(q.x1_upper, q.x2_upper, phases.phi - phases.theta_lo);
    ModeQuadratures { x1_lower: x1l, x2_lower: x2l, x1_upper: x1u, x2_upper: x2u }
}

/// Expresses the squeezed-field quadratures in the readout basis.
///
/// The squeezed modes are referenced to the LO rather than to the carriers, so
/// only `θ_LO` enters; the relative carrier phase `φ` does not act on them.
pub fn rotate_squeeze_readout(s: SqueezeModeQuadratures, phases: PhaseSettings) -> SqueezeModeQuadratures {
    let (s1l, s2l) = rotate_pair(s.s1_lower, s.s2_lower, phases.theta_lo);
    let (s1u, s2u) = rotate_pair(s.s1_upper, s.s2_upper, -phases.theta_lo);
    SqueezeModeQuadratures { s1_lower: s1l, s2_lower: s2l, s1_upper: s1u, s2_upper: s2u }
}

/// Combines quadratures already expressed in the readout basis.
///
/// `i_I = ½(X₁⁻ + X₁⁺ + S₁⁻ + S₁⁺)`, `i_Q = ½(X₂⁻ − X₂⁺ + S₂⁻ − S₂⁺)`.
#[inline]
pub fn demodulate_rotated(q: ModeQuadratures, s: SqueezeModeQuadratures) -> DemodulatedPair {
    DemodulatedPair {
        i_inphase: 0.5 * (q.x1_lower + q.x1_upper + s.s1_lower + s.s1_upper),
        i_quadrature: 0.5 * (q.x2_lower - q.x2_upper + s.s2_lower - s.s2_upper),
    }
}

/// Demodulated photocurrents for raw (unrotated) quadratures.
///
/// Rotates internally with [`rotate_readout`] and [`rotate_squeeze_readout`],
/// then applies [`demodulate_rotated`]. At `θ_LO = 0` this gives
/// `i_I = ½(X₁⁻ ± X₁⁺ + S₁⁻ + S₁⁺)` for `φ = 0, π`.
pub fn demodulate(q: ModeQuadratures, s: SqueezeModeQuadratures, phases: PhaseSettings) -> DemodulatedPair {
    demodulate_rotated(rotate_readout(q, phases), rotate_squeeze_readout(s, phases))
}

/// Tone-power gain (I plus Q) of an amplitude-quadrature signal relative to a
/// single interferometer, for equal per-interferometer carrier power.
///
/// Two interferometers give `20·log₁₀(2|cos(φ/2)|)`, independent of `θ_LO`;
/// perfect cancellation returns `-inf`.
pub fn signal_gain_db(n_interferometers: u8, phases: PhaseSettings) -> Result<f64> {
    match n_interferometers {
        1 => Ok(0.0),
        2 => {
            let amp = 2.0 * (0.5 * phases.phi).cos().abs();
            if amp < 1e-12 {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(20.0 * amp.log10())
            }
        }
        n => Err(Error::param("n_interferometers", n as f64, "must be 1 or 2")),
    }
}
