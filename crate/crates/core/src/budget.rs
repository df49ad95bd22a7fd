//! Optical efficiency budget and propagation along a beam path.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An efficiency with its absolute one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Efficiency {
    pub efficiency: f64,
    #[serde(default)]
    pub uncertainty: f64,
}

impl Efficiency {
    pub fn new(efficiency: f64, uncertainty: f64) -> Result<Self> {
        let e = Efficiency { efficiency, uncertainty };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param("efficiency", self.efficiency, "must lie in [0, 1]"));
        }
        if !(self.uncertainty >= 0.0 && self.uncertainty.is_finite()) {
            return Err(Error::param("uncertainty", self.uncertainty, "must be non-negative"));
        }
        Ok(())
    }

    /// True when the two values agree within their combined uncertainty.
    pub fn agrees_with(&self, other: &Efficiency) -> bool {
        let sigma = self.uncertainty.hypot(other.uncertainty);
        (self.efficiency - other.efficiency).abs() <= sigma
    }
}

pub const OPO_ESCAPE: &str = "opo_escape";
pub const INJECTION_PATH: &str = "injection_path";
pub const FARADAY_SINGLE_PASS: &str = "faraday_single_pass";
pub const DETECTOR_CONTRAST: &str = "detector_contrast";
pub const QUANTUM_EFFICIENCY: &str = "quantum_efficiency";
pub const INTERFEROMETER: &str = "interferometer";
pub const COMBINING_CAVITY_SINGLE_PASS: &str = "combining_cavity_single_pass";

/// Interferometer output to photodiode.
pub const SIGNAL_PATH: [&str; 5] = [
    INTERFEROMETER,
    COMBINING_CAVITY_SINGLE_PASS,
    FARADAY_SINGLE_PASS,
    DETECTOR_CONTRAST,
    QUANTUM_EFFICIENCY,
];

/// OPO to photodiode via a round trip through the interferometers.
pub const SQUEEZING_PATH: [&str; 9] = [
    OPO_ESCAPE,
    INJECTION_PATH,
    FARADAY_SINGLE_PASS,
    COMBINING_CAVITY_SINGLE_PASS,
    INTERFEROMETER,
    COMBINING_CAVITY_SINGLE_PASS,
    FARADAY_SINGLE_PASS,
    DETECTOR_CONTRAST,
    QUANTUM_EFFICIENCY,
];

/// Named component efficiencies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossBudget {
    pub components: BTreeMap<String, Efficiency>,
}

impl LossBudget {
    /// Component values measured on the twin-interferometer table.
    pub fn measured_table() -> Self {
        let entries = [
            (OPO_ESCAPE, 0.98, 0.01),
            (INJECTION_PATH, 0.97, 0.01),
            (FARADAY_SINGLE_PASS, 0.95, 0.01),
            (DETECTOR_CONTRAST, 0.97, 0.01),
            (QUANTUM_EFFICIENCY, 0.90, 0.02),
            (INTERFEROMETER, 0.95, 0.02),
            (COMBINING_CAVITY_SINGLE_PASS, 0.96, 0.01),
        ];
        LossBudget {
            components: entries
                .into_iter()
                .map(|(k, e, u)| (k.to_string(), Efficiency { efficiency: e, uncertainty: u }))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in &self.components {
            e.validate().map_err(|err| Error::InvalidInput(format!("budget component `{name}`: {err}")))?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Total efficiency of a path, with first-order uncertainty.
    ///
    /// A component listed `k` times contributes `η^k` and a relative error
    /// `k·σ/η` (its passes are fully correlated); distinct components are
    /// combined in quadrature.
    pub fn path_efficiency<S: AsRef<str>>(&self, path: &[S]) -> Result<Efficiency> {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for name in path {
            let name = name.as_ref();
            if !self.components.contains_key(name) {
                return Err(Error::InvalidInput(format!("unknown budget component `{name}`")));
            }
            *counts.entry(name).or_default() += 1;
        }
        let mut product = 1.0;
        let mut rel_var = 0.0;
        for (name, k) in counts {
            let c = &self.components[name];
            product *= c.efficiency.powi(k as i32);
            if c.efficiency > 0.0 {
                let rel = k as f64 * c.uncertainty / c.efficiency;
                rel_var += rel * rel;
            }
        }
        Ok(Efficiency { efficiency: product, uncertainty: product * rel_var.sqrt() })
    }
}
