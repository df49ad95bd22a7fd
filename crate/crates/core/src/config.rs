//! JSON experiment configuration.
//!
//! Every section has inline defaults reproducing the twin-interferometer
//! table, so `{}` is a complete configuration. Unknown keys are rejected and
//! parse errors carry the JSON path of the offending field.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::budget::{Efficiency, LossBudget, SIGNAL_PATH, SQUEEZING_PATH};
use crate::error::{Error, Result};
use crate::fit::invert_dephasing_params;
use crate::sideband::{CarrierLayout, PhaseSettings};
use crate::spectrum::{Band, WelchOptions, Window};
use crate::squeezing::{DegradationParams, PumpOperatingPoint};
use crate::synth::{AcousticStub, SimConfig, Tone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub carrier: CarrierLayout,
    pub budget: LossBudget,
    /// Named beam paths as ordered component lists.
    pub paths: BTreeMap<String, Vec<String>>,
    /// Independently measured path efficiencies to compare against.
    pub measured: BTreeMap<String, Efficiency>,
    pub degradation: DegradationConfig,
    pub pump: PumpConfig,
    pub phases: PhaseSettings,
    pub tones: Vec<Tone>,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisConfig,
    pub fig2: Fig2Config,
    pub fig3: Fig3Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let paths = [("signal", &SIGNAL_PATH[..]), ("squeezing", &SQUEEZING_PATH[..])]
            .into_iter()
            .map(|(k, p)| (k.to_string(), p.iter().map(|s| s.to_string()).collect()))
            .collect();
        let measured = [
            ("signal".to_string(), Efficiency { efficiency: 0.77, uncertainty: 0.03 }),
            ("squeezing".to_string(), Efficiency { efficiency: 0.64, uncertainty: 0.01 }),
        ]
        .into_iter()
        .collect();
        ExperimentConfig {
            carrier: CarrierLayout::default(),
            budget: LossBudget::measured_table(),
            paths,
            measured,
            degradation: DegradationConfig::default(),
            pump: PumpConfig::default(),
            phases: PhaseSettings::default(),
            tones: Vec::new(),
            simulation: SimulationConfig::default(),
            analysis: AnalysisConfig::default(),
            fig2: Fig2Config::default(),
            fig3: Fig3Config::default(),
        }
    }
}

/// Either fitted `(eta_c, xi_prime)` or per-mode `(eta1, eta2)`, each with
/// optional RMS phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationConfig {
    pub eta_c: Option<f64>,
    pub xi_prime: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub theta_rms: Option<f64>,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        DegradationConfig {
            eta_c: Some(0.64),
            xi_prime: Some(3.7e-4),
            eta1: None,
            eta2: None,
            theta_rms: Some(8e-3),
        }
    }
}

impl DegradationConfig {
    pub fn resolve(&self) -> Result<DegradationParams> {
        match (self.eta1, self.eta2, self.eta_c, self.xi_prime) {
            (Some(e1), Some(e2), None, None) => {
                DegradationParams::from_efficiencies(e1, e2, self.theta_rms.unwrap_or(0.0))
            }
            (None, None, Some(ec), Some(xp)) => {
                let mut d = DegradationParams::from_fit(ec, xp)?;
                d.theta_rms = self.theta_rms;
                Ok(d)
            }
            _ => Err(Error::Config("degradation: give either eta_c and xi_prime, or eta1 and eta2".into())),
        }
    }

    /// Per-mode efficiencies and phase noise for the synthesizer.
    ///
    /// Fitted parameters are split with the configured `theta_rms` (zero if absent).
    pub fn mode_efficiencies(&self) -> Result<(f64, f64, f64)> {
        let d = self.resolve()?;
        let theta = self.theta_rms.unwrap_or(0.0);
        match (d.eta1, d.eta2) {
            (Some(e1), Some(e2)) => Ok((e1, e2, theta)),
            _ => {
                let (e1, e2, _) = invert_dephasing_params(d.eta_c, d.xi_prime, theta)?;
                Ok((e1, e2, theta))
            }
        }
    }
}

/// Pump operating point; give one of `x`, `r`, or both powers (mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub x: Option<f64>,
    pub r: Option<f64>,
    pub pump_power: Option<f64>,
    pub threshold_power: Option<f64>,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig { x: Some(0.65), r: None, pump_power: None, threshold_power: None }
    }
}

impl PumpConfig {
    pub fn resolve(&self) -> Result<PumpOperatingPoint> {
        let mut op = match (self.x, self.r, self.pump_power, self.threshold_power) {
            (_, _, Some(p), Some(pt)) => PumpOperatingPoint::from_powers(p, pt)?,
            (_, _, Some(_), None) | (_, _, None, Some(_)) => {
                return Err(Error::Config(
                    "pump: pump_power and threshold_power must be given together".into(),
                ))
            }
            (Some(x), _, None, None) => PumpOperatingPoint::from_x(x)?,
            (None, Some(r), None, None) => PumpOperatingPoint::from_r(r)?,
            (None, None, None, None) => return Err(Error::Config("pump: no operating point given".into())),
        };
        // any redundant fields must agree with the one used
        if let Some(x) = self.x {
            op.x = x;
        }
        if let Some(r) = self.r {
            op.r = r;
        }
        op.validate()?;
        Ok(op)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Hz.
    pub sample_rate: f64,
    /// Seconds per run.
    pub duration: f64,
    pub seed: u64,
    /// Inject squeezing in `simulate`.
    pub squeezing: bool,
    /// Samples per phase-jitter block; default 1 ms.
    pub jitter_block: Option<usize>,
    /// Flat dark-noise variance, shot-noise units.
    pub dark_noise: f64,
    pub acoustic: Option<AcousticStub>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            sample_rate: 200e3,
            duration: 2.0,
            seed: 1,
            squeezing: true,
            jitter_block: None,
            dark_noise: 0.0,
            acoustic: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub band: Band,
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
    /// Exclude tone bins from band averages.
    pub notch_tones: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let w = WelchOptions::default();
        AnalysisConfig {
            band: Band::default(),
            segment_len: w.segment_len,
            overlap: w.overlap,
            window: w.window,
            notch_tones: true,
        }
    }
}

impl AnalysisConfig {
    pub fn welch(&self) -> WelchOptions {
        WelchOptions { segment_len: self.segment_len, overlap: self.overlap, window: self.window }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fig2Mode {
    /// Band averages of synthesized records.
    Simulate,
    /// Forward model plus Gaussian dB noise.
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig2Config {
    pub mode: Fig2Mode,
    pub x_grid: Vec<f64>,
    pub replicates: usize,
    /// Gaussian dB noise added to every point.
    pub noise_db: f64,
    /// Seconds per synthesized point.
    pub duration: f64,
    pub bootstrap: usize,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config {
            mode: Fig2Mode::Simulate,
            x_grid: (2..=9).map(|i| i as f64 / 10.0).collect(),
            replicates: 3,
            noise_db: 0.0,
            duration: 0.5,
            bootstrap: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Config {
    /// Per-interferometer amplitude-quadrature tone at the carrier layout's signal frequency.
    pub tone_amplitude: f64,
    /// Upper-interferometer tone amplitude relative to the lower one.
    pub amplitude_ratio: f64,
    /// Offset added to `φ = π` in the cancelling runs, radians.
    pub phi_error: f64,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Fig3Config { tone_amplitude: 0.5, amplitude_ratio: 1.0, phi_error: 0.0 }
    }
}

fn section<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("{name}: {other}")),
    })
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("at `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        section("carrier", self.carrier.validate())?;
        section("budget", self.budget.validate())?;
        for (name, e) in &self.measured {
            section("measured", e.validate().map_err(|err| Error::InvalidInput(format!("`{name}`: {err}"))))?;
        }
        section("degradation", self.degradation.resolve())?;
        section("degradation", self.degradation.mode_efficiencies())?;
        section("pump", self.pump.resolve())?;
        section("phases", self.phases.normalized())?;
        let a = &self.analysis;
        section("analysis.band", Band::new(a.band.lo, a.band.hi))?;
        if a.segment_len < 16 || !(0.0..1.0).contains(&a.overlap) {
            return Err(Error::Config(
                "analysis: segment_len must be at least 16 and overlap in [0, 1)".into(),
            ));
        }
        if 2.0 * a.band.hi > self.simulation.sample_rate {
            return Err(Error::Config("analysis.band: upper edge above the Nyquist frequency".into()));
        }
        section("simulation", self.sim_config(self.simulation.seed).validate())?;
        let f2 = &self.fig2;
        if let Some(x) = f2.x_grid.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::Config(format!("fig2.x_grid: x = {x} outside [0, 1)")));
        }
        if f2.replicates == 0 || !(f2.noise_db >= 0.0) || !(f2.duration > 0.0) {
            return Err(Error::Config(
                "fig2: replicates must be positive, noise_db and duration non-negative".into(),
            ));
        }
        let f3 = &self.fig3;
        if !(f3.tone_amplitude >= 0.0 && f3.amplitude_ratio >= 0.0 && f3.phi_error.is_finite()) {
            return Err(Error::Config("fig3: amplitudes must be non-negative".into()));
        }
        Ok(())
    }

    /// Synthesizer settings for the configured operating point, phases and tones.
    pub fn sim_config(&self, seed: u64) -> SimConfig {
        let s = &self.simulation;
        let mut cfg = SimConfig::new(s.sample_rate, s.duration, seed);
        cfg.phases = self.phases;
        cfg.tones = self.tones.clone();
        cfg.carrier = self.carrier;
        cfg.jitter_block = s.jitter_block;
        cfg.dark_noise = s.dark_noise;
        cfg.acoustic = s.acoustic;
        if s.squeezing {
            if let (Ok(op), Ok((e1, e2, theta))) = (self.pump.resolve(), self.degradation.mode_efficiencies())
            {
                cfg = cfg.with_squeezing(op, e1, e2, theta);
            }
        }
        cfg
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}
