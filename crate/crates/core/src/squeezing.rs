//! Two-mode squeezed-state variances and their degradation by loss and dephasing.
//!
//! Variances are in shot-noise units. The pump parameter `x = √(P/P_T)` and
//! the squeezing parameter `r` are related by `x = tanh(r/2)` with both
//! non-negative, for which
//!
//! ```text
//! V₋ = 1 − 4x/(1+x)² = e^(−2r)
//! V₊ = 1 + 4x/(1−x)² = e^(+2r)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when cross-checking redundant operating-point fields.
const CONSISTENCY_TOL: f64 = 1e-9;

/// Normalised pump parameter `x` converted to a squeezing parameter `r`.
pub fn r_from_x(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::param("x", x, "pump parameter must lie in [0, 1)"));
    }
    Ok(2.0 * x.atanh())
}

/// Squeezing parameter `r` converted to the normalised pump parameter `x`.
pub fn x_from_r(r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param("r", r, "squeezing parameter must be finite and non-negative"));
    }
    Ok((0.5 * r).tanh())
}

/// Pump operating point of the OPO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpOperatingPoint {
    pub x: f64,
    pub r: f64,
    /// Pump power, mW.
    pub pump_power: Option<f64>,
    /// Oscillation threshold, mW.
    pub threshold_power: Option<f64>,
}

impl PumpOperatingPoint {
    pub fn from_x(x: f64) -> Result<Self> {
        Ok(PumpOperatingPoint { x, r: r_from_x(x)?, pump_power: None, threshold_power: None })
    }

    pub fn from_r(r: f64) -> Result<Self> {
        let x = x_from_r(r)?;
        if x >= 1.0 {
            return Err(Error::param("r", r, "squeezing parameter maps to threshold"));
        }
        Ok(PumpOperatingPoint { x, r, pump_power: None, threshold_power: None })
    }

    /// Operating point from measured pump and threshold powers (mW).
    pub fn from_powers(pump_power: f64, threshold_power: f64) -> Result<Self> {
        if !(threshold_power > 0.0 && threshold_power.is_finite()) {
            return Err(Error::param("threshold_power", threshold_power, "must be positive"));
        }
        if !(pump_power >= 0.0) {
            return Err(Error::param("pump_power", pump_power, "must be non-negative"));
        }
        let x = (pump_power / threshold_power).sqrt();
        Ok(PumpOperatingPoint {
            pump_power: Some(pump_power),
            threshold_power: Some(threshold_power),
            ..Self::from_x(x)?
        })
    }

    pub fn vacuum() -> Self {
        Self::from_x(0.0).expect("x = 0 is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.x) {
            return Err(Error::param("x", self.x, "pump parameter must lie in [0, 1)"));
        }
        if !(self.r >= 0.0) {
            return Err(Error::param("r", self.r, "must be non-negative"));
        }
        if ((0.5 * self.r).tanh() - self.x).abs() > CONSISTENCY_TOL {
            return Err(Error::param("r", self.r, "inconsistent with x = tanh(r/2)"));
        }
        if let (Some(p), Some(pt)) = (self.pump_power, self.threshold_power) {
            if ((p / pt).sqrt() - self.x).abs() > CONSISTENCY_TOL {
                return Err(Error::param("x", self.x, "inconsistent with sqrt(P/P_T)"));
            }
        }
        Ok(())
    }
}

/// Squeezed and antisqueezed noise variances (1 = shot noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    pub v_minus: f64,
    pub v_plus: f64,
}

impl VariancePair {
    pub fn new(v_minus: f64, v_plus: f64) -> Result<Self> {
        if !(v_minus > 0.0 && v_minus.is_finite()) {
            return Err(Error::param("v_minus", v_minus, "variance must be positive"));
        }
        if !(v_plus > 0.0 && v_plus.is_finite()) {
            return Err(Error::param("v_plus", v_plus, "variance must be positive"));
        }
        Ok(VariancePair { v_minus, v_plus })
    }

    /// Both variances in dB relative to shot noise.
    pub fn to_db(self) -> (f64, f64) {
        (10.0 * self.v_minus.log10(), 10.0 * self.v_plus.log10())
    }
}

/// Ideal variances of a lossless two-mode squeezed state.
pub fn pure_variances(op_point: &PumpOperatingPoint) -> Result<VariancePair> {
    op_point.validate()?;
    let v = pure_variances_at(op_point.x)?;
    debug_assert!((v.v_minus - (-2.0 * op_point.r).exp()).abs() <= CONSISTENCY_TOL * v.v_plus);
    Ok(v)
}

/// [`pure_variances`] from the pump parameter alone.
pub fn pure_variances_at(x: f64) -> Result<VariancePair> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::param("x", x, "pump parameter must lie in [0, 1)"));
    }
    let v_minus = 1.0 - 4.0 * x / ((1.0 + x) * (1.0 + x));
    let v_plus = 1.0 + 4.0 * x / ((1.0 - x) * (1.0 - x));
    Ok(VariancePair { v_minus, v_plus })
}

/// Variance measured with the squeeze ellipse rotated by `theta_sq` from the readout.
pub fn variance_at_angle(v: VariancePair, theta_sq: f64) -> f64 {
    let (s, c) = theta_sq.sin_cos();
    v.v_minus * c * c + v.v_plus * s * s
}

/// Loss and dephasing parameters.
///
/// `eta1`/`eta2` (and `xi`, `theta_rms`) are only known when the parameters
/// were built from per-mode efficiencies; a fitted model knows `eta_c` and
/// `xi_prime` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub eta_c: f64,
    pub xi: Option<f64>,
    pub theta_rms: Option<f64>,
    pub xi_prime: f64,
}

fn check_efficiency(name: &'static str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param(name, eta, "efficiency must lie in [0, 1]"));
    }
    Ok(())
}

impl DegradationParams {
    /// Derives `η_c`, `Ξ` and `Ξ′` from per-mode efficiencies and RMS phase noise.
    pub fn from_efficiencies(eta1: f64, eta2: f64, theta_rms: f64) -> Result<Self> {
        check_efficiency("eta1", eta1)?;
        check_efficiency("eta2", eta2)?;
        let xi = dephasing_from_efficiencies(eta1, eta2)?;
        let xi_prime = effective_dephasing(xi, theta_rms)?;
        Self::check_xi_prime(xi_prime)?;
        Ok(DegradationParams {
            eta1: Some(eta1),
            eta2: Some(eta2),
            eta_c: 0.5 * (eta1 + eta2),
            xi: Some(xi),
            theta_rms: Some(theta_rms),
            xi_prime,
        })
    }

    /// Parameters as returned by a fit, with the per-mode split unknown.
    pub fn from_fit(eta_c: f64, xi_prime: f64) -> Result<Self> {
        check_efficiency("eta_c", eta_c)?;
        Self::check_xi_prime(xi_prime)?;
        Ok(DegradationParams { eta1: None, eta2: None, eta_c, xi: None, theta_rms: None, xi_prime })
    }

    fn check_xi_prime(xi_prime: f64) -> Result<()> {
        if !(0.0..=0.5).contains(&xi_prime) {
            return Err(Error::param("xi_prime", xi_prime, "effective dephasing must lie in [0, 0.5]"));
        }
        Ok(())
    }

    pub fn lossless() -> Self {
        Self::from_fit(1.0, 0.0).expect("valid")
    }
}

/// Degraded variances `V′∓ = η_c[(1−Ξ′)V∓ + Ξ′V±] + (1−η_c)`.
pub fn degrade(v: VariancePair, d: &DegradationParams) -> VariancePair {
    degrade_raw(v, d.eta_c, d.xi_prime)
}

/// [`degrade`] on bare parameters, without validation.
#[inline]
pub fn degrade_raw(v: VariancePair, eta_c: f64, xi_prime: f64) -> VariancePair {
    let mix = |a: f64, b: f64| eta_c * ((1.0 - xi_prime) * a + xi_prime * b) + (1.0 - eta_c);
    VariancePair { v_minus: mix(v.v_minus, v.v_plus), v_plus: mix(v.v_plus, v.v_minus) }
}

/// Dephasing produced by unequal mode efficiencies.
pub fn dephasing_from_efficiencies(eta1: f64, eta2: f64) -> Result<f64> {
    for (name, eta) in [("eta1", eta1), ("eta2", eta2)] {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param(name, eta, "efficiency must lie in (0, 1]"));
        }
    }
    let sum = eta1 + eta2;
    Ok((sum - 2.0 * (eta1 * eta2).sqrt()) / (2.0 * sum))
}

/// Effective dephasing `Ξ′ = Ξ + θ² − 2Ξθ²` combining differential loss and phase noise.
pub fn effective_dephasing(xi: f64, theta_rms: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&xi) {
        return Err(Error::param("xi", xi, "dephasing must lie in [0, 0.5]"));
    }
    if !(theta_rms >= 0.0 && theta_rms.is_finite()) {
        return Err(Error::param("theta_rms", theta_rms, "must be finite and non-negative"));
    }
    let t2 = theta_rms * theta_rms;
    Ok(xi + t2 - 2.0 * xi * t2)
}
