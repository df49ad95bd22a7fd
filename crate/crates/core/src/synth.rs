//! Monte Carlo synthesis of demodulated photocurrents.
//!
//! Noise is generated directly at baseband, white and vacuum-normalised; the
//! heterodyne beat itself is never sampled. The time axis is split into
//! segments whose random numbers come from their own counter-based streams,
//! so a run is bit-identical regardless of how many workers generate it.

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Module, StreamRng};
use crate::sideband::{demodulate, CarrierLayout, ModeQuadratures, PhaseSettings, SqueezeModeQuadratures};
use crate::squeezing::{pure_variances, PumpOperatingPoint};

/// Demodulated currents carry a factor ½ per carrier pair; this rescales them
/// so that vacuum input has unit variance in each output channel.
pub const SHOT_NORMALIZATION: f64 = SQRT_2;

/// Minimum number of samples in a synthesized record.
pub const MIN_SAMPLES: usize = 1 << 12;

/// Target samples per independently seeded segment; rounded up to whole jitter blocks.
const SEGMENT_TARGET: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interferometer {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneQuadrature {
    #[default]
    Amplitude,
    Phase,
}

/// A sinusoidal signal injected into one interferometer, in quadrature units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub target: Interferometer,
    /// Hz.
    pub frequency: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub quadrature: ToneQuadrature,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

impl Tone {
    pub fn amplitude_tone(target: Interferometer, frequency: f64, amplitude: f64) -> Self {
        Tone { target, frequency, amplitude, quadrature: ToneQuadrature::Amplitude, phase: 0.0 }
    }
}

/// Optional low-frequency environmental noise with a 1/f² spectrum below `corner`.
///
/// Modelled as `lines` sinusoids with amplitude `amplitude·corner/f` and
/// random phases, added to both output channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticStub {
    pub amplitude: f64,
    #[serde(default = "AcousticStub::default_corner")]
    pub corner: f64,
    #[serde(default = "AcousticStub::default_lines")]
    pub lines: usize,
}

impl AcousticStub {
    fn default_corner() -> f64 {
        10e3
    }
    fn default_lines() -> usize {
        64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Hz.
    pub sample_rate: f64,
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    pub op_point: PumpOperatingPoint,
    pub phases: PhaseSettings,
    /// Inject the squeezed field; otherwise the readout sees vacuum.
    pub squeezing: bool,
    /// Efficiency of the lower-carrier squeezed mode.
    pub eta1: f64,
    /// Efficiency of the upper-carrier squeezed mode.
    pub eta2: f64,
    /// RMS squeeze-angle jitter, radians.
    pub theta_rms: f64,
    /// Samples per jitter block; `None` means 1 ms.
    pub jitter_block: Option<usize>,
    pub tones: Vec<Tone>,
    pub carrier: CarrierLayout,
    /// Variance of a flat detector dark-noise floor, shot-noise units.
    pub dark_noise: f64,
    pub acoustic: Option<AcousticStub>,
}

impl SimConfig {
    /// Shot-noise-only configuration with no tones.
    pub fn new(sample_rate: f64, duration: f64, seed: u64) -> Self {
        SimConfig {
            sample_rate,
            duration,
            seed,
            op_point: PumpOperatingPoint::vacuum(),
            phases: PhaseSettings::default(),
            squeezing: false,
            eta1: 1.0,
            eta2: 1.0,
            theta_rms: 0.0,
            jitter_block: None,
            tones: Vec::new(),
            carrier: CarrierLayout::default(),
            dark_noise: 0.0,
            acoustic: None,
        }
    }

    pub fn with_squeezing(
        mut self,
        op_point: PumpOperatingPoint,
        eta1: f64,
        eta2: f64,
        theta_rms: f64,
    ) -> Self {
        self.squeezing = true;
        self.op_point = op_point;
        self.eta1 = eta1;
        self.eta2 = eta2;
        self.theta_rms = theta_rms;
        self
    }

    pub fn with_phases(mut self, phases: PhaseSettings) -> Self {
        self.phases = phases;
        self
    }

    pub fn with_tone(mut self, tone: Tone) -> Self {
        self.tones.push(tone);
        self
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn block_len(&self) -> usize {
        self.jitter_block.unwrap_or_else(|| (self.sample_rate * 1e-3).round().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::param("sample_rate", self.sample_rate, "must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", self.duration, "must be positive"));
        }
        if self.n_samples() < MIN_SAMPLES {
            return Err(Error::param("duration", self.duration, "record must contain at least 4096 samples"));
        }
        for t in &self.tones {
            if !(t.frequency > 0.0 && 2.0 * t.frequency < self.sample_rate) {
                return Err(Error::param(
                    "tone.frequency",
                    t.frequency,
                    "must be positive and below the Nyquist frequency",
                ));
            }
            if !(t.amplitude >= 0.0 && t.amplitude.is_finite()) {
                return Err(Error::param("tone.amplitude", t.amplitude, "must be non-negative"));
            }
            if !t.phase.is_finite() {
                return Err(Error::param("tone.phase", t.phase, "must be finite"));
            }
        }
        self.op_point.validate()?;
        self.phases.normalized()?;
        for (name, eta) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::param(name, eta, "efficiency must lie in [0, 1]"));
            }
        }
        if !(self.theta_rms >= 0.0 && self.theta_rms.is_finite()) {
            return Err(Error::param("theta_rms", self.theta_rms, "must be non-negative"));
        }
        if self.jitter_block == Some(0) {
            return Err(Error::param("jitter_block", 0.0, "must be at least one sample"));
        }
        if !(self.dark_noise >= 0.0 && self.dark_noise.is_finite()) {
            return Err(Error::param("dark_noise", self.dark_noise, "must be non-negative"));
        }
        if let Some(a) = &self.acoustic {
            if !(a.amplitude >= 0.0 && a.corner > 0.0 && a.lines > 0) {
                return Err(Error::param("acoustic.amplitude", a.amplitude, "invalid acoustic stub"));
            }
        }
        self.carrier.validate()
    }
}

/// One synthesized record of both demodulated channels, in shot-noise units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPair {
    pub i_inphase: Vec<f64>,
    pub i_quadrature: Vec<f64>,
    pub sample_rate: f64,
    pub metadata: SimConfig,
}

impl TimeSeriesPair {
    pub fn len(&self) -> usize {
        self.i_inphase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_inphase.is_empty()
    }
}

/// Draws `n` samples of an aligned two-mode squeezed state rotated by `theta_sq`.
///
/// With `u, w ~ N(0, V₋)` and `v, z ~ N(0, V₊)`:
/// `S₁⁻ = (u+v)/√2`, `S₁⁺ = (u−v)/√2`, `S₂⁻ = (w+z)/√2`, `S₂⁺ = (z−w)/√2`,
/// so `½Var(S₁⁻+S₁⁺) = ½Var(S₂⁻−S₂⁺) = V₋`.
pub fn sample_two_mode_state(
    n: usize,
    op_point: &PumpOperatingPoint,
    theta_sq: f64,
    rng: &mut StreamRng,
) -> Result<Vec<SqueezeModeQuadratures>> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "need at least one sample"));
    }
    let v = pure_variances(op_point)?;
    let (sd_minus, sd_plus) = (v.v_minus.sqrt(), v.v_plus.sqrt());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let (u, v, w, z) = (sd_minus * g[0], sd_plus * g[1], sd_minus * g[2], sd_plus * g[3]);
        let s = SqueezeModeQuadratures {
            s1_lower: (u + v) / SQRT_2,
            s1_upper: (u - v) / SQRT_2,
            s2_lower: (w + z) / SQRT_2,
            s2_upper: (z - w) / SQRT_2,
        };
        out.push(if theta_sq == 0.0 { s } else { s.rotated(theta_sq) });
    }
    Ok(out)
}

fn check_eta(name: &'static str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param(name, eta, "efficiency must lie in [0, 1]"));
    }
    Ok(())
}

/// Beamsplitter loss with the same efficiency on both modes.
pub fn apply_loss(samples: &mut [SqueezeModeQuadratures], eta: f64, rng: &mut StreamRng) -> Result<()> {
    apply_mode_loss(samples, eta, eta, rng)
}

/// Beamsplitter loss `q → √η·q + √(1−η)·vac` with separate lower/upper efficiencies.
pub fn apply_mode_loss(
    samples: &mut [SqueezeModeQuadratures],
    eta_lower: f64,
    eta_upper: f64,
    rng: &mut StreamRng,
) -> Result<()> {
    check_eta("eta_lower", eta_lower)?;
    check_eta("eta_upper", eta_upper)?;
    let (tl, tu) = (eta_lower.sqrt(), eta_upper.sqrt());
    let (ll, lu) = ((1.0 - eta_lower).sqrt(), (1.0 - eta_upper).sqrt());
    for s in samples.iter_mut() {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        s.s1_lower = tl * s.s1_lower + ll * g[0];
        s.s2_lower = tl * s.s2_lower + ll * g[1];
        s.s1_upper = tu * s.s1_upper + lu * g[2];
        s.s2_upper = tu * s.s2_upper + lu * g[3];
    }
    Ok(())
}

/// Rotates both squeezed modes by a random angle `δθ ~ N(0, θ_rms²)` drawn once per block.
pub fn apply_phase_jitter(
    samples: &mut [SqueezeModeQuadratures],
    theta_rms: f64,
    block_len: usize,
    rng: &mut StreamRng,
) -> Result<()> {
    if !(theta_rms >= 0.0 && theta_rms.is_finite()) {
        return Err(Error::param("theta_rms", theta_rms, "must be non-negative"));
    }
    if block_len == 0 {
        return Err(Error::param("block_len", 0.0, "must be at least one sample"));
    }
    if theta_rms == 0.0 {
        return Ok(());
    }
    let dist = Normal::new(0.0, theta_rms).expect("finite positive sigma");
    for block in samples.chunks_mut(block_len) {
        let dtheta = dist.sample(rng);
        for s in block.iter_mut() {
            *s = s.rotated(dtheta);
        }
    }
    Ok(())
}

/// Analytic coherent-cancellation depth between the sum and difference readouts.
///
/// The phasors are `a₊ = a⁻ + a⁺e^{iε}` and `a₋ = a⁻ − a⁺e^{iε}`; the result is
/// `20·log₁₀(|a₊|/|a₋|)`. Perfect cancellation returns `+inf`.
pub fn cancellation_residual_db(amp_lower: f64, amp_upper: f64, phi_error: f64) -> Result<f64> {
    for (name, a) in [("amp_lower", amp_lower), ("amp_upper", amp_upper)] {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param(name, a, "amplitude must be non-negative"));
        }
    }
    if amp_lower == 0.0 && amp_upper == 0.0 {
        return Err(Error::InvalidInput("both amplitudes are zero".into()));
    }
    let (s, c) = phi_error.sin_cos();
    let plus = (amp_lower + amp_upper * c).hypot(amp_upper * s);
    let minus = (amp_lower - amp_upper * c).hypot(amp_upper * s);
    if minus <= 1e-15 * plus {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (plus / minus).log10())
}

struct AcousticLines {
    freqs: Vec<f64>,
    amps: Vec<f64>,
    phases_i: Vec<f64>,
    phases_q: Vec<f64>,
}

impl AcousticLines {
    fn new(stub: &AcousticStub, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Module::Acoustic, 0, 0);
        let freqs: Vec<f64> = (1..=stub.lines).map(|k| stub.corner * k as f64 / stub.lines as f64).collect();
        let amps = freqs.iter().map(|f| stub.amplitude * stub.corner / f).collect();
        let phases_i = (0..stub.lines).map(|_| rng.gen::<f64>() * TAU).collect();
        let phases_q = (0..stub.lines).map(|_| rng.gen::<f64>() * TAU).collect();
        AcousticLines { freqs, amps, phases_i, phases_q }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        let mut i = 0.0;
        let mut q = 0.0;
        for k in 0..self.freqs.len() {
            let w = TAU * self.freqs[k] * t;
            i += self.amps[k] * (w + self.phases_i[k]).cos();
            q += self.amps[k] * (w + self.phases_q[k]).cos();
        }
        (i, q)
    }
}

fn signal_at(tones: &[Tone], t: f64) -> ModeQuadratures {
    let mut q = ModeQuadratures::default();
    for tone in tones {
        let v = tone.amplitude * (TAU * tone.frequency * t + tone.phase).cos();
        match (tone.target, tone.quadrature) {
            (Interferometer::Lower, ToneQuadrature::Amplitude) => q.x1_lower += v,
            (Interferometer::Lower, ToneQuadrature::Phase) => q.x2_lower += v,
            (Interferometer::Upper, ToneQuadrature::Amplitude) => q.x1_upper += v,
            (Interferometer::Upper, ToneQuadrature::Phase) => q.x2_upper += v,
        }
    }
    q
}

fn noise_segment(cfg: &SimConfig, segment: u64, len: usize) -> Result<Vec<SqueezeModeQuadratures>> {
    let seed = cfg.seed;
    if !cfg.squeezing {
        let mut rng = rng::stream(seed, Module::Vacuum, 0, segment);
        return Ok((0..len)
            .map(|_| {
                SqueezeModeQuadratures::from_array(std::array::from_fn(|_| StandardNormal.sample(&mut rng)))
            })
            .collect());
    }
    let mut rng = rng::stream(seed, Module::Squeezer, 0, segment);
    let mut s = sample_two_mode_state(len, &cfg.op_point, cfg.phases.theta_sq, &mut rng)?;
    let mut rng = rng::stream(seed, Module::Loss, 0, segment);
    apply_mode_loss(&mut s, cfg.eta1, cfg.eta2, &mut rng)?;
    let mut rng = rng::stream(seed, Module::Jitter, 0, segment);
    apply_phase_jitter(&mut s, cfg.theta_rms, cfg.block_len(), &mut rng)?;
    Ok(s)
}

fn synthesize_segment(
    cfg: &SimConfig,
    acoustic: Option<&AcousticLines>,
    segment: u64,
    start: usize,
    len: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let noise = noise_segment(cfg, segment, len)?;
    let mut dark = (cfg.dark_noise > 0.0).then(|| rng::stream(cfg.seed, Module::Dark, 0, segment));
    let dark_sd = cfg.dark_noise.sqrt();
    let mut i_out = Vec::with_capacity(len);
    let mut q_out = Vec::with_capacity(len);
    for (k, s) in noise.into_iter().enumerate() {
        let t = (start + k) as f64 / cfg.sample_rate;
        let d = demodulate(signal_at(&cfg.tones, t), s, cfg.phases);
        let mut i = SHOT_NORMALIZATION * d.i_inphase;
        let mut q = SHOT_NORMALIZATION * d.i_quadrature;
        if let Some(rng) = dark.as_mut() {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            i += dark_sd * a;
            q += dark_sd * b;
        }
        if let Some(lines) = acoustic {
            let (ai, aq) = lines.at(t);
            i += ai;
            q += aq;
        }
        i_out.push(i);
        q_out.push(q);
    }
    Ok((i_out, q_out))
}

/// Generates both demodulated channels for `config`.
///
/// Per sample: tones populate the signal quadratures; the readout noise is
/// vacuum, or the squeezed field after per-mode loss and block-wise angle
/// jitter; both are rotated into the readout basis and demodulated.
pub fn synthesize(config: &SimConfig) -> Result<TimeSeriesPair> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.phases = cfg.phases.normalized()?;
    let n = cfg.n_samples();
    let block = cfg.block_len();
    let seg_len = SEGMENT_TARGET.div_ceil(block) * block;
    let n_segments = n.div_ceil(seg_len);
    let acoustic = cfg.acoustic.as_ref().map(|a| AcousticLines::new(a, cfg.seed));

    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..n_segments)
        .into_par_iter()
        .map(|seg| {
            let start = seg * seg_len;
            let len = seg_len.min(n - start);
            synthesize_segment(&cfg, acoustic.as_ref(), seg as u64, start, len)
        })
        .collect::<Result<_>>()?;

    let mut i_inphase = Vec::with_capacity(n);
    let mut i_quadrature = Vec::with_capacity(n);
    for (i, q) in parts {
        i_inphase.extend(i);
        i_quadrature.extend(q);
    }
    if i_inphase.iter().chain(&i_quadrature).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("synthesis produced non-finite samples".into()));
    }
    Ok(TimeSeriesPair { i_inphase, i_quadrature, sample_rate: cfg.sample_rate, metadata: cfg })
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Standard error of a Gaussian sample variance estimate.
pub fn variance_std_error(variance: f64, n: usize) -> f64 {
    variance * (2.0 / (n as f64 - 1.0)).sqrt()
}

/// Exact ensemble average of `sin²δ` for `δ ~ N(0, σ²)`.
pub fn mean_sin_sq(theta_rms: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * theta_rms * theta_rms).exp())
}
