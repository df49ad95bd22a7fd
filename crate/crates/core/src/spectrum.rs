//! Power spectral density estimation and the shot-noise-relative measurement chain.
//!
//! Spectra are stored in dB. An unnormalised spectrum is in dB re 1 unit²/Hz;
//! after [`normalize_to_shot`] it is in dB relative to shot noise. All
//! arithmetic (averaging, subtraction) happens on linear power.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// dB value reported for bins with zero power.
pub const MIN_DB: f64 = -300.0;

/// Default clamp applied by [`subtract_dark_noise`], linear units.
pub const DARK_EPSILON: f64 = 1e-12;

/// Bins on either side of a tone excluded from its floor estimate.
const TONE_GUARD_BINS: usize = 4;
/// Bins on either side of a tone used for its floor estimate.
const TONE_FLOOR_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window coefficients.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
                    s * s
                })
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }

    /// Equivalent noise bandwidth in bins.
    pub fn enbw_bins(self) -> f64 {
        match self {
            Window::Hann => 1.5,
            Window::Rectangular => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }
}

/// What 0 dB means for a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// 1 unit²/Hz.
    Absolute,
    /// Shot-noise level.
    ShotNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchOptions {
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchOptions {
    fn default() -> Self {
        WelchOptions { segment_len: 4096, overlap: 0.5, window: Window::Hann }
    }
}

/// Frequency band `[lo, hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidInput(format!("invalid band {lo}:{hi}")));
        }
        Ok(Band { lo, hi })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }
}

impl Default for Band {
    /// The shot-noise-limited analysis band, 12–50 kHz.
    fn default() -> Self {
        Band { lo: 12e3, hi: 50e3 }
    }
}

impl FromStr for Band {
    type Err = Error;

    /// Parses `LO:HI` in Hz.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("band `{s}` is not of the form LO:HI")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("band `{s}`: `{v}` is not a number")))
        };
        Band::new(parse(lo)?, parse(hi)?)
    }
}

/// Frequency interval excluded from band averages, centred on a tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Notch {
    pub freq: f64,
    pub half_width: f64,
}

impl Notch {
    pub fn contains(&self, f: f64) -> bool {
        (f - self.freq).abs() <= self.half_width
    }
}

/// One-sided power spectral density with its measurement metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub freqs: Vec<f64>,
    pub psd_db: Vec<f64>,
    /// Bin spacing, Hz.
    pub rbw: f64,
    pub averages: usize,
    pub window: Window,
    pub reference: Reference,
    /// Bins clamped during dark-noise subtraction.
    #[serde(default)]
    pub clamped_bins: usize,
}

fn to_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(MIN_DB)
    } else {
        MIN_DB
    }
}

fn from_db(d: f64) -> f64 {
    10f64.powf(d / 10.0)
}

impl SpectrumRecord {
    pub fn linear(&self) -> Vec<f64> {
        self.psd_db.iter().map(|&d| from_db(d)).collect()
    }

    /// Noise-equivalent bandwidth of one bin, Hz.
    pub fn enbw(&self) -> f64 {
        self.rbw * self.window.enbw_bins()
    }

    fn with_linear(&self, psd: Vec<f64>, reference: Reference) -> SpectrumRecord {
        SpectrumRecord { psd_db: psd.into_iter().map(to_db).collect(), reference, ..self.clone() }
    }

    fn check_axis(&self, other: &SpectrumRecord) -> Result<()> {
        let same = self.freqs.len() == other.freqs.len()
            && self.freqs.iter().zip(&other.freqs).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        if same {
            Ok(())
        } else {
            Err(Error::InvalidInput("spectra have different frequency axes".into()))
        }
    }

    fn band_bins(&self, band: Band) -> Result<Vec<usize>> {
        let (first, last) = (self.freqs[0], *self.freqs.last().expect("non-empty"));
        if band.lo < first || band.hi > last {
            return Err(Error::InvalidInput(format!(
                "band {}:{} Hz lies outside the axis {first}:{last} Hz",
                band.lo, band.hi
            )));
        }
        Ok((0..self.freqs.len()).filter(|&k| band.contains(self.freqs[k])).collect())
    }

    /// Index of the bin nearest `f`, if it lies within half a bin.
    pub fn bin_of(&self, f: f64) -> Option<usize> {
        let k = (f / self.rbw).round();
        if k < 0.0 || k as usize >= self.freqs.len() {
            return None;
        }
        let k = k as usize;
        ((self.freqs[k] - f).abs() <= 0.5 * self.rbw).then_some(k)
    }
}

/// Welch estimate of the one-sided PSD of `x` sampled at `sample_rate`.
///
/// Density scaling: unit-variance white noise reads `2/fs` per Hz, and the
/// PSD summed over bins times the bin width recovers the variance.
/// Each segment has its mean removed. Zero-power bins are reported at [`MIN_DB`].
pub fn welch_psd(x: &[f64], sample_rate: f64, opts: &WelchOptions) -> Result<SpectrumRecord> {
    let n = opts.segment_len;
    if n < 8 {
        return Err(Error::param("segment_len", n as f64, "must be at least 8"));
    }
    if !(0.0..1.0).contains(&opts.overlap) {
        return Err(Error::param("overlap", opts.overlap, "must lie in [0, 1)"));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::param("sample_rate", sample_rate, "must be positive"));
    }
    if x.len() < n {
        return Err(Error::InvalidInput(format!(
            "series of {} samples is shorter than one {n}-sample segment",
            x.len()
        )));
    }
    let step = ((n as f64) * (1.0 - opts.overlap)).round().max(1.0) as usize;
    let n_seg = (x.len() - n) / step + 1;
    let w = opts.window.coefficients(n);
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let n_bins = n / 2 + 1;

    let periodograms: Vec<Vec<f64>> = (0..n_seg)
        .into_par_iter()
        .map(|s| {
            let seg = &x[s * step..s * step + n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            let mut buf: Vec<Complex<f64>> =
                seg.iter().zip(&w).map(|(v, wi)| Complex::new((v - mean) * wi, 0.0)).collect();
            fft.process(&mut buf);
            buf[..n_bins].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();

    let mut acc = vec![0.0; n_bins];
    for p in &periodograms {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let scale = 1.0 / (sample_rate * s2 * n_seg as f64);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let rbw = sample_rate / n as f64;
    Ok(SpectrumRecord {
        freqs: (0..n_bins).map(|k| k as f64 * rbw).collect(),
        psd_db: psd.into_iter().map(to_db).collect(),
        rbw,
        averages: n_seg,
        window: opts.window,
        reference: Reference::Absolute,
        clamped_bins: 0,
    })
}

/// PSD of unit-variance white noise, i.e. the shot-noise level of a record in shot units.
pub fn shot_level(sample_rate: f64) -> f64 {
    2.0 / sample_rate
}

/// Expresses `spec` relative to the mean of `shot_reference` over `band`.
pub fn normalize_to_shot(
    spec: &SpectrumRecord,
    shot_reference: &SpectrumRecord,
    band: Band,
) -> Result<SpectrumRecord> {
    spec.check_axis(shot_reference)?;
    let bins = shot_reference.band_bins(band)?;
    if bins.is_empty() {
        return Err(Error::InvalidInput("analysis band contains no bins".into()));
    }
    let lin = shot_reference.linear();
    let mean = bins.iter().map(|&k| lin[k]).sum::<f64>() / bins.len() as f64;
    normalize_to_level(spec, mean)
}

/// Expresses `spec` relative to a known linear shot-noise level.
pub fn normalize_to_level(spec: &SpectrumRecord, level: f64) -> Result<SpectrumRecord> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::param("shot level", level, "must be positive"));
    }
    let offset = 10.0 * level.log10();
    Ok(SpectrumRecord {
        psd_db: spec.psd_db.iter().map(|d| (d - offset).max(MIN_DB)).collect(),
        reference: Reference::ShotNoise,
        ..spec.clone()
    })
}

/// Mean linear power over `band`, skipping notched bins, returned in dB.
pub fn band_average(spec: &SpectrumRecord, band: Band, notches: &[Notch]) -> Result<f64> {
    let lin = spec.linear();
    let vals: Vec<f64> = spec
        .band_bins(band)?
        .into_iter()
        .filter(|&k| !notches.iter().any(|n| n.contains(spec.freqs[k])))
        .map(|k| lin[k])
        .collect();
    if vals.is_empty() {
        return Err(Error::InvalidInput("analysis band contains no usable bins".into()));
    }
    Ok(to_db(vals.iter().sum::<f64>() / vals.len() as f64))
}

/// Notches around every tone frequency, wide enough for the window's main lobe.
pub fn tone_notches(spec: &SpectrumRecord, tone_freqs: &[f64]) -> Vec<Notch> {
    tone_freqs
        .iter()
        .map(|&freq| Notch { freq, half_width: (TONE_GUARD_BINS as f64 - 0.5) * spec.rbw })
        .collect()
}

/// Removes a dark-noise spectrum in the linear domain.
///
/// Fails if the dark noise reaches the measured level anywhere in `band`;
/// elsewhere the result is clamped at `epsilon` and the number of clamped
/// bins is recorded.
pub fn subtract_dark_noise(
    spec: &SpectrumRecord,
    dark: &SpectrumRecord,
    band: Band,
    epsilon: f64,
) -> Result<SpectrumRecord> {
    spec.check_axis(dark)?;
    let (s, d) = (spec.linear(), dark.linear());
    for k in spec.band_bins(band)? {
        if d[k] >= s[k] {
            return Err(Error::InvalidInput(format!(
                "dark noise reaches the measured level at {} Hz",
                spec.freqs[k]
            )));
        }
    }
    let mut clamped = 0;
    let out: Vec<f64> = s
        .iter()
        .zip(&d)
        .map(|(a, b)| {
            let v = a - b;
            if v < epsilon {
                clamped += 1;
                epsilon
            } else {
                v
            }
        })
        .collect();
    let mut rec = spec.with_linear(out, spec.reference);
    rec.clamped_bins = spec.clamped_bins + clamped;
    Ok(rec)
}

fn tone_floor_window(spec: &SpectrumRecord, tone_freq: f64) -> Result<(usize, Vec<usize>)> {
    let k0 = spec
        .bin_of(tone_freq)
        .ok_or_else(|| Error::InvalidInput(format!("tone at {tone_freq} Hz is not on the frequency axis")))?;
    let reach = TONE_GUARD_BINS + TONE_FLOOR_BINS;
    if k0 < reach + 1 || k0 + reach >= spec.freqs.len() {
        return Err(Error::InvalidInput(format!("tone at {tone_freq} Hz is too close to the axis edge")));
    }
    let floor = (TONE_GUARD_BINS..reach).flat_map(|o| [k0 - o, k0 + o]).collect();
    Ok((k0, floor))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Tone bin power over the median floor of the surrounding bins, dB.
pub fn tone_snr(spec: &SpectrumRecord, tone_freq: f64) -> Result<f64> {
    let (k0, floor) = tone_floor_window(spec, tone_freq)?;
    let lin = spec.linear();
    let floor = median(floor.into_iter().map(|k| lin[k]).collect());
    Ok(to_db(lin[k0] / floor))
}

/// Integrated tone power above the local median floor, in linear units
/// (PSD units × Hz). Sums the main lobe, `±(guard−1)` bins around the tone.
pub fn tone_power(spec: &SpectrumRecord, tone_freq: f64) -> Result<f64> {
    let (k0, floor) = tone_floor_window(spec, tone_freq)?;
    let lin = spec.linear();
    let floor = median(floor.into_iter().map(|k| lin[k]).collect());
    let lobe = TONE_GUARD_BINS - 1;
    let p: f64 = (k0 - lobe..=k0 + lobe).map(|k| lin[k] - floor).sum();
    Ok(p * spec.rbw)
}

/// Mean-square power of the component of `x` at `freq`, by lock-in demodulation.
///
/// A sinusoid of amplitude `a` reads `a²/2`. The noise contribution falls as
/// `1/len`, far below a Welch bin, which makes this the estimator of choice
/// for deep cancellation ratios.
pub fn lockin_power(x: &[f64], sample_rate: f64, freq: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    if !(freq > 0.0 && 2.0 * freq < sample_rate) {
        return Err(Error::param("freq", freq, "must lie between 0 and Nyquist"));
    }
    let w = std::f64::consts::TAU * freq / sample_rate;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let (s, c) = (w * n as f64).sin_cos();
        re += v * c;
        im -= v * s;
    }
    let n = x.len() as f64;
    Ok(2.0 * (re * re + im * im) / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::TAU;

    const FS: f64 = 200e3;

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    fn flat(db: f64) -> SpectrumRecord {
        let freqs: Vec<f64> = (0..2049).map(|k| k as f64 * FS / 4096.0).collect();
        SpectrumRecord {
            psd_db: vec![db; freqs.len()],
            freqs,
            rbw: FS / 4096.0,
            averages: 1,
            window: Window::Hann,
            reference: Reference::ShotNoise,
            clamped_bins: 0,
        }
    }

    #[test]
    fn white_noise_reads_zero_db_after_normalisation() {
        let x = white(1 << 20, 1);
        let spec = welch_psd(&x, FS, &WelchOptions::default()).unwrap();
        let norm = normalize_to_level(&spec, shot_level(FS)).unwrap();
        let avg = band_average(&norm, Band::default(), &[]).unwrap();
        assert_abs_diff_eq!(avg, 0.0, epsilon = 0.05);
        assert!(spec.freqs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(spec.averages, (x.len() - 4096) / 2048 + 1);
    }

    #[test]
    fn parseval_within_one_percent() {
        let x = white(1_000_000, 2);
        for window in [Window::Hann, Window::Rectangular] {
            let opts = WelchOptions { window, ..Default::default() };
            let spec = welch_psd(&x, FS, &opts).unwrap();
            let total: f64 = spec.linear().iter().sum::<f64>() * spec.rbw;
            let var = variance(&x);
            assert!((total / var - 1.0).abs() < 0.01, "{window:?}: {total} vs {var}");
        }
    }

    #[test]
    fn tone_power_matches_half_amplitude_squared() {
        // on-bin tone, no noise: integrated power equals the time-domain variance a²/2
        let a = 0.7;
        let f = 512.0 * FS / 4096.0;
        let x: Vec<f64> = (0..1 << 18).map(|i| a * (TAU * f * i as f64 / FS).cos()).collect();
        let spec = welch_psd(&x, FS, &WelchOptions::default()).unwrap();
        let lin = spec.linear();
        let k0 = spec.bin_of(f).unwrap();
        // peak bin: a²/2 spread over the window's noise bandwidth
        assert_abs_diff_eq!(lin[k0] * spec.enbw() / (a * a / 2.0), 1.0, epsilon = 1e-9);
        let total: f64 = lin[k0 - 3..=k0 + 3].iter().sum::<f64>() * spec.rbw;
        assert_abs_diff_eq!(total, variance(&x), epsilon = 1e-9 * total);
        assert_abs_diff_eq!(tone_power(&spec, f).unwrap(), a * a / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_signal_hits_floor() {
        let spec = welch_psd(&vec![0.0; 8192], FS, &WelchOptions::default()).unwrap();
        assert!(spec.psd_db.iter().all(|&d| d == MIN_DB));
    }

    #[test]
    fn welch_errors() {
        let x = white(1000, 3);
        assert!(welch_psd(&x, FS, &WelchOptions::default()).is_err());
        let bad = WelchOptions { overlap: 1.0, ..Default::default() };
        assert!(welch_psd(&white(10_000, 3), FS, &bad).is_err());
    }

    #[test]
    fn normalisation_examples() {
        let shot = flat(-50.0);
        let same = normalize_to_shot(&shot, &shot, Band::default()).unwrap();
        assert!(same.psd_db.iter().all(|d| d.abs() < 1e-9));
        let double = flat(-50.0 + 10.0 * 2f64.log10());
        let n = normalize_to_shot(&double, &shot, Band::default()).unwrap();
        assert_abs_diff_eq!(n.psd_db[100], 3.0103, epsilon = 1e-4);
        assert_eq!(n.reference, Reference::ShotNoise);

        // idempotent in offset terms
        let ref_norm = normalize_to_shot(&shot, &shot, Band::default()).unwrap();
        let twice = normalize_to_shot(&n, &ref_norm, Band::default()).unwrap();
        for (a, b) in twice.psd_db.iter().zip(&n.psd_db) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        let mut short = flat(0.0);
        short.freqs.pop();
        short.psd_db.pop();
        assert!(normalize_to_shot(&short, &shot, Band::default()).is_err());
    }

    #[test]
    fn band_average_examples() {
        assert_abs_diff_eq!(band_average(&flat(0.0), Band::default(), &[]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            band_average(&flat(-4.05), Band::default(), &[]).unwrap(),
            -4.05,
            epsilon = 1e-12
        );
        assert!(band_average(&flat(0.0), Band::new(12e3, 200e3).unwrap(), &[]).is_err());
        let narrow = Band::new(12_020.0, 12_050.0).unwrap();
        assert!(band_average(&flat(0.0), narrow, &[]).is_err());
    }

    #[test]
    fn notch_removes_tone() {
        let f = 512.0 * FS / 4096.0;
        let noise = white(1 << 20, 4);
        let x: Vec<f64> =
            noise.iter().enumerate().map(|(i, v)| v + 3.0 * (TAU * f * i as f64 / FS).cos()).collect();
        let opts = WelchOptions::default();
        let with_tone = normalize_to_level(&welch_psd(&x, FS, &opts).unwrap(), shot_level(FS)).unwrap();
        let without = normalize_to_level(&welch_psd(&noise, FS, &opts).unwrap(), shot_level(FS)).unwrap();
        let notches = tone_notches(&with_tone, &[f]);
        let a = band_average(&with_tone, Band::default(), &notches).unwrap();
        let b = band_average(&without, Band::default(), &notches).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        assert_abs_diff_eq!(a, 0.0, epsilon = 0.05);
        assert!(band_average(&with_tone, Band::default(), &[]).unwrap() > 0.5);
    }

    #[test]
    fn dark_subtraction() {
        let spec = flat(0.0);
        let zero_dark = SpectrumRecord { psd_db: vec![MIN_DB; spec.freqs.len()], ..spec.clone() };
        let same = subtract_dark_noise(&spec, &zero_dark, Band::default(), DARK_EPSILON).unwrap();
        assert_eq!(same.psd_db, spec.psd_db);

        let dark = flat(-10.0);
        let out = subtract_dark_noise(&spec, &dark, Band::default(), DARK_EPSILON).unwrap();
        assert_abs_diff_eq!(out.linear()[200], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(out.psd_db[200], -0.4576, epsilon = 1e-4);
        assert_eq!(out.clamped_bins, 0);

        assert!(subtract_dark_noise(&spec, &spec, Band::default(), DARK_EPSILON).is_err());

        // out-of-band excess dark noise is clamped and counted
        let mut partial = flat(-10.0);
        partial.psd_db[5] = 1.0;
        let out = subtract_dark_noise(&spec, &partial, Band::default(), DARK_EPSILON).unwrap();
        assert_eq!(out.clamped_bins, 1);
        assert_abs_diff_eq!(out.psd_db[5], -120.0, epsilon = 1e-9);
    }

    #[test]
    fn lockin_reads_tone_power() {
        let f = 25e3;
        let noise = white(1 << 19, 8);
        let x: Vec<f64> =
            noise.iter().enumerate().map(|(i, v)| v + (TAU * f * i as f64 / FS + 0.4).cos()).collect();
        assert_abs_diff_eq!(lockin_power(&x, FS, f).unwrap(), 0.5, epsilon = 0.5 * 0.01);
        // noise alone sits near 2/len
        let p = lockin_power(&noise, FS, f).unwrap();
        assert!(p < 20.0 * 2.0 / noise.len() as f64, "{p}");
        assert!(lockin_power(&[], FS, f).is_err());
        assert!(lockin_power(&x, FS, FS).is_err());
    }

    #[test]
    fn tone_snr_examples() {
        let n_seg: f64 = 4096.0;
        // expected peak-bin SNR for amplitude a in unit white noise: (a²/2)/(1.5·rbw·2/fs)
        let a = (2.0 * 100.0 * 1.5 * 2.0 / n_seg).sqrt();
        let f = 512.0 * FS / 4096.0;
        let noise = white(1 << 21, 5);
        let x: Vec<f64> =
            noise.iter().enumerate().map(|(i, v)| v + a * (TAU * f * i as f64 / FS).cos()).collect();
        let opts = WelchOptions::default();
        let spec = welch_psd(&x, FS, &opts).unwrap();
        assert_abs_diff_eq!(tone_snr(&spec, f).unwrap(), 20.0, epsilon = 0.5);

        let bare = welch_psd(&noise, FS, &opts).unwrap();
        assert_abs_diff_eq!(tone_snr(&bare, f).unwrap(), 0.0, epsilon = 0.5);

        // squeezed floor, same tone power: SNR improves by the floor reduction
        let g = 10f64.powf(-4.0 / 20.0);
        let y: Vec<f64> =
            noise.iter().enumerate().map(|(i, v)| g * v + a * (TAU * f * i as f64 / FS).cos()).collect();
        let sq = welch_psd(&y, FS, &opts).unwrap();
        let gain = tone_snr(&sq, f).unwrap() - tone_snr(&spec, f).unwrap();
        assert_abs_diff_eq!(gain, 4.0, epsilon = 0.5);

        assert!(tone_snr(&spec, 100.0).is_err());
        assert!(tone_snr(&spec, 99_990.0).is_err());
        assert!(tone_snr(&spec, 1e6).is_err());
    }

    #[test]
    fn band_parsing() {
        let b: Band = "12000:50000".parse().unwrap();
        assert_eq!((b.lo, b.hi), (12e3, 50e3));
        assert!("50000:12000".parse::<Band>().is_err());
        assert!("abc".parse::<Band>().is_err());
        assert!("1:x".parse::<Band>().is_err());
    }

    #[test]
    fn estimator_variance_halves_with_double_duration() {
        let spread = |n: usize| {
            let vals: Vec<f64> = (0..40)
                .map(|s| {
                    let spec = welch_psd(&white(n, 100 + s), FS, &WelchOptions::default()).unwrap();
                    let norm = normalize_to_level(&spec, shot_level(FS)).unwrap();
                    10f64.powf(band_average(&norm, Band::default(), &[]).unwrap() / 10.0)
                })
                .collect();
            variance(&vals)
        };
        let ratio = spread(1 << 16) / spread(1 << 17);
        // F-distribution with (39, 39) dof: 99% interval is roughly [0.44, 2.3] around 2
        assert!(ratio > 2.0 * 0.44 && ratio < 2.0 * 2.3, "ratio {ratio}");
    }
}
