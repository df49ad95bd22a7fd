//! The command-line verbs as library functions.
//!
//! Every artifact carries the configuration hash: CSV files as a leading
//! `# config_hash=` comment, JSON sidecars as a `config_hash` field. Output
//! depends only on the configuration, never on thread count.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::budget::Efficiency;
use crate::config::{ExperimentConfig, Fig2Mode};
use crate::error::{Error, Result};
use crate::fit::{
    self, fit_dephasing_model, invert_dephasing, synthetic_dataset, theta_rms_from_fit, DataPoint,
    FitOptions, FitResult, Quadrature, SqueezingDataset,
};
use crate::rng::{self, derive_seed, Module};
use crate::sideband::{signal_gain_db, PhaseSettings};
use crate::spectrum::{
    band_average, lockin_power, normalize_to_level, normalize_to_shot, shot_level, subtract_dark_noise,
    tone_notches, tone_snr, welch_psd, Band, Notch, SpectrumRecord, DARK_EPSILON,
};
use crate::squeezing::{degrade, pure_variances, PumpOperatingPoint};
use crate::synth::{cancellation_residual_db, synthesize, Interferometer, SimConfig, Tone};

/// Tolerances a reproduced fit is judged against.
pub const FIG2_ETA_TOL: f64 = 0.02;
pub const FIG2_XI_TOL: f64 = 1.3e-4;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serialises");
    text.push('\n');
    write_file(path, &text)
}

fn csv_preamble(hash: &str, extra: &[(&str, String)]) -> String {
    let mut s = format!("# config_hash={hash}\n");
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

fn spectrum_csv(hash: &str, spec: &SpectrumRecord, extra: &[(&str, String)]) -> String {
    let mut s = csv_preamble(hash, extra);
    s.push_str("freq_hz,psd_db\n");
    for (f, d) in spec.freqs.iter().zip(&spec.psd_db) {
        let _ = writeln!(s, "{f:.6},{d:.6}");
    }
    s
}

// ---------------------------------------------------------------- budget

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub name: String,
    pub efficiency: f64,
    pub uncertainty: f64,
    pub measured: Option<Efficiency>,
    /// Agreement within the combined uncertainty, when a measurement exists.
    pub agrees: Option<bool>,
}

pub fn budget(cfg: &ExperimentConfig) -> Result<Vec<PathReport>> {
    if cfg.budget.is_empty() {
        return Err(Error::InvalidInput("loss budget is empty".into()));
    }
    if cfg.paths.is_empty() {
        return Err(Error::InvalidInput("no beam paths defined".into()));
    }
    cfg.paths
        .iter()
        .map(|(name, path)| {
            let e = cfg
                .budget
                .path_efficiency(path)
                .map_err(|err| Error::InvalidInput(format!("path `{name}`: {err}")))?;
            let measured = cfg.measured.get(name).copied();
            Ok(PathReport {
                name: name.clone(),
                efficiency: e.efficiency,
                uncertainty: e.uncertainty,
                agrees: measured.map(|m| m.agrees_with(&e)),
                measured,
            })
        })
        .collect()
}

pub fn render_budget(reports: &[PathReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = write!(s, "{:<12} {:.4} ± {:.4}", r.name, r.efficiency, r.uncertainty);
        if let (Some(m), Some(ok)) = (r.measured, r.agrees) {
            let flag = if ok { "agrees" } else { "DISAGREES" };
            let _ = write!(s, "   measured {:.4} ± {:.4}  {flag}", m.efficiency, m.uncertainty);
        }
        s.push('\n');
    }
    s
}

pub fn write_budget(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathReport>> {
    let reports = budget(cfg)?;
    write_json(&out.join("budget.json"), &json!({ "config_hash": cfg.hash(), "paths": reports }))?;
    Ok(reports)
}

// ---------------------------------------------------------------- model curve

pub fn model_curve(cfg: &ExperimentConfig, x_grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if x_grid.is_empty() {
        return Err(Error::InvalidInput("empty x grid".into()));
    }
    fit::model_curve(&cfg.degradation.resolve()?, x_grid)
}

pub fn write_model_curve(cfg: &ExperimentConfig, x_grid: &[f64], out: &Path) -> Result<PathBuf> {
    let rows = model_curve(cfg, x_grid)?;
    let d = cfg.degradation.resolve()?;
    let mut s =
        csv_preamble(&cfg.hash(), &[("eta_c", d.eta_c.to_string()), ("xi_prime", d.xi_prime.to_string())]);
    s.push_str("x,squeezed_db,antisqueezed_db\n");
    for (x, sq, asq) in rows {
        let _ = writeln!(s, "{x:.6},{sq:.6},{asq:.6}");
    }
    let path = out.join("model_curve.csv");
    write_file(&path, &s)?;
    Ok(path)
}

// ---------------------------------------------------------------- simulate

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let sim = cfg.sim_config(cfg.simulation.seed);
    let ts = synthesize(&sim)?;
    let hash = cfg.hash();
    let mut s =
        csv_preamble(&hash, &[("seed", sim.seed.to_string()), ("sample_rate", sim.sample_rate.to_string())]);
    s.reserve(ts.len() * 48);
    s.push_str("i_inphase,i_quadrature\n");
    for (i, q) in ts.i_inphase.iter().zip(&ts.i_quadrature) {
        let _ = writeln!(s, "{i},{q}");
    }
    let csv_path = out.join("timeseries.csv");
    write_file(&csv_path, &s)?;
    let side = out.join("timeseries.json");
    write_json(
        &side,
        &json!({
            "config_hash": hash,
            "seed": sim.seed,
            "sample_rate": sim.sample_rate,
            "n_samples": ts.len(),
            "simulation": sim,
        }),
    )?;
    Ok(vec![csv_path, side])
}

/// Two-channel record read back from [`simulate`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFile {
    pub i_inphase: Vec<f64>,
    pub i_quadrature: Vec<f64>,
    pub sample_rate: Option<f64>,
    pub config_hash: Option<String>,
}

pub fn read_time_series(path: &Path) -> Result<TimeSeriesFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut sample_rate = None;
    let mut config_hash = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let kv = line.trim_start_matches('#').trim();
        if let Some(v) = kv.strip_prefix("sample_rate=") {
            sample_rate = v.parse().ok();
        } else if let Some(v) = kv.strip_prefix("config_hash=") {
            config_hash = Some(v.to_string());
        }
    }
    let mut rdr =
        csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut i_inphase = Vec::new();
    let mut i_quadrature = Vec::new();
    for (n, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (i, q) =
            rec.map_err(|e| Error::InvalidInput(format!("{}: row {}: {e}", path.display(), n + 1)))?;
        i_inphase.push(i);
        i_quadrature.push(q);
    }
    if i_inphase.is_empty() {
        return Err(Error::InvalidInput(format!("{}: empty time series", path.display())));
    }
    Ok(TimeSeriesFile { i_inphase, i_quadrature, sample_rate, config_hash })
}

// ---------------------------------------------------------------- spectrum

fn flat_dark(like: &SpectrumRecord, level: f64) -> SpectrumRecord {
    SpectrumRecord { psd_db: vec![10.0 * level.log10(); like.freqs.len()], ..like.clone() }
}

/// Welch PSD in dB relative to shot noise, with dark noise removed when configured.
pub fn shot_normalized_psd(x: &[f64], sample_rate: f64, cfg: &ExperimentConfig) -> Result<SpectrumRecord> {
    let raw = welch_psd(x, sample_rate, &cfg.analysis.welch())?;
    let spec = normalize_to_level(&raw, shot_level(sample_rate))?;
    if cfg.simulation.dark_noise > 0.0 {
        let dark = flat_dark(&spec, cfg.simulation.dark_noise);
        subtract_dark_noise(&spec, &dark, cfg.analysis.band, DARK_EPSILON)
    } else {
        Ok(spec)
    }
}

fn notches_for(cfg: &ExperimentConfig, spec: &SpectrumRecord, tones: &[f64]) -> Vec<Notch> {
    if cfg.analysis.notch_tones {
        tone_notches(spec, tones)
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub files: Vec<PathBuf>,
    pub band_average_inphase_db: f64,
    pub band_average_quadrature_db: f64,
}

pub fn spectrum(input: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<SpectrumSummary> {
    let ts = read_time_series(input)?;
    let fs_hz = ts.sample_rate.unwrap_or(cfg.simulation.sample_rate);
    let hash = cfg.hash();
    let tones: Vec<f64> = cfg.tones.iter().map(|t| t.frequency).collect();
    let stem =
        input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "spectrum".into());

    let mut files = Vec::new();
    let mut averages = Vec::new();
    let mut meta = None;
    for (label, x) in [("inphase", &ts.i_inphase), ("quadrature", &ts.i_quadrature)] {
        let spec = shot_normalized_psd(x, fs_hz, cfg)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", input.display())))?;
        let avg = band_average(&spec, cfg.analysis.band, &notches_for(cfg, &spec, &tones))?;
        let path = out.join(format!("{stem}_{label}.csv"));
        write_file(&path, &spectrum_csv(&hash, &spec, &[("channel", label.to_string())]))?;
        files.push(path);
        averages.push(avg);
        meta.get_or_insert((spec.rbw, spec.enbw(), spec.averages, spec.window, spec.clamped_bins));
    }
    let (rbw, enbw, n_avg, window, clamped) = meta.expect("two channels");
    let side = out.join(format!("{stem}_spectrum.json"));
    write_json(
        &side,
        &json!({
            "config_hash": hash,
            "source": input.display().to_string(),
            "source_config_hash": ts.config_hash,
            "sample_rate": fs_hz,
            "rbw_hz": rbw,
            "enbw_hz": enbw,
            "averages": n_avg,
            "window": window,
            "segment_len": cfg.analysis.segment_len,
            "overlap": cfg.analysis.overlap,
            "band": cfg.analysis.band,
            "clamped_bins": clamped,
            "band_average_db": { "inphase": averages[0], "quadrature": averages[1] },
        }),
    )?;
    files.push(side);
    Ok(SpectrumSummary {
        files,
        band_average_inphase_db: averages[0],
        band_average_quadrature_db: averages[1],
    })
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub fit: FitResult,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub eta_split_err: Option<(f64, f64)>,
    pub inversion_error: Option<String>,
    pub theta_rms: f64,
    pub theta_rms_lower: f64,
    pub theta_rms_upper: f64,
}

pub fn fit_report(data: &SqueezingDataset, cfg: &ExperimentConfig, bootstrap: usize) -> Result<FitReport> {
    let opts = FitOptions {
        bootstrap: (bootstrap >= 2).then(|| (bootstrap, derive_seed(cfg.simulation.seed, "bootstrap", 0))),
        ..FitOptions::default()
    };
    let fit = fit_dephasing_model(data, &opts)?;
    let theta = cfg.degradation.theta_rms.unwrap_or(0.0);
    let (eta1, eta2, eta_split_err, inversion_error) = match invert_dephasing(&fit, theta) {
        Ok(p) => (Some(p.eta1), Some(p.eta2), Some((p.eta1_err, p.eta2_err)), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let t = theta_rms_from_fit(&fit, 0.0)?;
    Ok(FitReport {
        fit,
        eta1,
        eta2,
        eta_split_err,
        inversion_error,
        theta_rms: t.value,
        theta_rms_lower: t.lower,
        theta_rms_upper: t.upper,
    })
}

pub fn fit_file(dataset: &Path, cfg: &ExperimentConfig, out: &Path, bootstrap: usize) -> Result<FitReport> {
    let file = fs::File::open(dataset).map_err(|e| Error::io(dataset, e))?;
    let data = SqueezingDataset::from_csv_reader(file)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", dataset.display())))?;
    let report = fit_report(&data, cfg, bootstrap)?;
    write_json(
        &out.join("fit.json"),
        &json!({
            "config_hash": cfg.hash(),
            "dataset": dataset.display().to_string(),
            "report": report,
        }),
    )?;
    Ok(report)
}

// ---------------------------------------------------------------- fig2

fn fig2_point(cfg: &ExperimentConfig, x: f64, quadrature: Quadrature, seed: u64) -> Result<f64> {
    let (e1, e2, theta) = cfg.degradation.mode_efficiencies()?;
    let theta_sq = match quadrature {
        Quadrature::Squeezed => 0.0,
        Quadrature::Antisqueezed => FRAC_PI_2,
    };
    let mut sim = cfg.sim_config(seed);
    sim.duration = cfg.fig2.duration;
    sim.tones.clear();
    let sim = sim
        .with_squeezing(PumpOperatingPoint::from_x(x)?, e1, e2, theta)
        .with_phases(PhaseSettings::sum(theta_sq));
    let ts = synthesize(&sim)?;
    let spec = shot_normalized_psd(&ts.i_inphase, sim.sample_rate, cfg)?;
    band_average(&spec, cfg.analysis.band, &[])
}

/// Squeezing and antisqueezing versus pump parameter, one point per replicate.
pub fn fig2_dataset(cfg: &ExperimentConfig) -> Result<SqueezingDataset> {
    let f2 = &cfg.fig2;
    let seed = cfg.simulation.seed;
    let d = cfg.degradation.resolve()?;
    match f2.mode {
        Fig2Mode::Model => synthetic_dataset(
            d.eta_c,
            d.xi_prime,
            &f2.x_grid,
            f2.replicates,
            f2.noise_db,
            derive_seed(seed, "fig2-model", 0),
        ),
        Fig2Mode::Simulate => {
            let jobs: Vec<(f64, Quadrature)> = f2
                .x_grid
                .iter()
                .flat_map(|&x| {
                    [Quadrature::Squeezed, Quadrature::Antisqueezed]
                        .into_iter()
                        .flat_map(move |q| std::iter::repeat((x, q)).take(f2.replicates))
                })
                .collect();
            let levels: Vec<f64> = jobs
                .par_iter()
                .enumerate()
                .map(|(k, &(x, q))| fig2_point(cfg, x, q, derive_seed(seed, "fig2", k as u64)))
                .collect::<Result<_>>()?;
            let mut extra = rng::stream(seed, Module::Dataset, 1, 0);
            let noise = Normal::new(0.0, f2.noise_db).expect("validated noise level");
            let points = jobs
                .into_iter()
                .zip(levels)
                .map(|((x, quadrature), level)| DataPoint {
                    x,
                    quadrature,
                    noise_db: level + if f2.noise_db > 0.0 { noise.sample(&mut extra) } else { 0.0 },
                    weight: 1.0,
                })
                .collect();
            Ok(SqueezingDataset::new(points, f2.replicates))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Summary {
    pub truth_eta_c: f64,
    pub truth_xi_prime: f64,
    pub report: FitReport,
    pub eta_c_within_tolerance: bool,
    pub xi_prime_within_tolerance: bool,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

pub fn reproduce_fig2(cfg: &ExperimentConfig, out: &Path) -> Result<Fig2Summary> {
    let hash = cfg.hash();
    let data = fig2_dataset(cfg)?;
    let report = fit_report(&data, cfg, cfg.fig2.bootstrap)?;
    let truth = cfg.degradation.resolve()?;

    let data_path = out.join("fig2_data.csv");
    write_file(&data_path, &(csv_preamble(&hash, &[]) + &data.to_csv()))?;

    let grid: Vec<f64> = (0..=95).map(|i| i as f64 / 100.0).collect();
    let fitted = fit::model_curve(&report.fit.degradation()?, &grid)?;
    let truth_curve = fit::model_curve(&truth, &grid)?;
    let mut s = csv_preamble(&hash, &[]);
    s.push_str("x,squeezed_db,antisqueezed_db,truth_squeezed_db,truth_antisqueezed_db\n");
    for ((x, sq, asq), (_, tsq, tasq)) in fitted.into_iter().zip(truth_curve) {
        let _ = writeln!(s, "{x:.6},{sq:.6},{asq:.6},{tsq:.6},{tasq:.6}");
    }
    let model_path = out.join("fig2_model.csv");
    write_file(&model_path, &s)?;

    let summary = Fig2Summary {
        truth_eta_c: truth.eta_c,
        truth_xi_prime: truth.xi_prime,
        eta_c_within_tolerance: (report.fit.eta_c.value - truth.eta_c).abs() <= FIG2_ETA_TOL,
        xi_prime_within_tolerance: (report.fit.xi_prime.value - truth.xi_prime).abs() <= FIG2_XI_TOL,
        report,
        files: vec![data_path, model_path, out.join("fig2_fit.json")],
    };
    write_json(
        &out.join("fig2_fit.json"),
        &json!({ "config_hash": hash, "mode": cfg.fig2.mode, "summary": summary }),
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- fig3

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fig3Run {
    Shot,
    Single,
    TwinSum,
    TwinDifference,
    SqueezedSum,
    SqueezedDifference,
    Antisqueezed,
}

impl Fig3Run {
    pub const ALL: [Fig3Run; 7] = [
        Fig3Run::Shot,
        Fig3Run::Single,
        Fig3Run::TwinSum,
        Fig3Run::TwinDifference,
        Fig3Run::SqueezedSum,
        Fig3Run::SqueezedDifference,
        Fig3Run::Antisqueezed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fig3Run::Shot => "shot",
            Fig3Run::Single => "single",
            Fig3Run::TwinSum => "twin_sum",
            Fig3Run::TwinDifference => "twin_difference",
            Fig3Run::SqueezedSum => "squeezed_sum",
            Fig3Run::SqueezedDifference => "squeezed_difference",
            Fig3Run::Antisqueezed => "antisqueezed",
        }
    }
}

/// Synthesizer settings for one spectra run.
pub fn fig3_sim_config(cfg: &ExperimentConfig, run: Fig3Run) -> Result<SimConfig> {
    let f3 = &cfg.fig3;
    let seed = derive_seed(cfg.simulation.seed, run.name(), 0);
    let mut sim = cfg.sim_config(seed);
    sim.squeezing = false;
    sim.tones.clear();
    let freq = cfg.carrier.signal_freq;
    let lower = Tone::amplitude_tone(Interferometer::Lower, freq, f3.tone_amplitude);
    let upper = Tone::amplitude_tone(Interferometer::Upper, freq, f3.tone_amplitude * f3.amplitude_ratio);
    let difference_phi = PI + f3.phi_error;
    let (e1, e2, theta) = cfg.degradation.mode_efficiencies()?;
    let op = cfg.pump.resolve()?;
    let sim = match run {
        Fig3Run::Shot => sim.with_phases(PhaseSettings::sum(0.0)),
        Fig3Run::Single => sim.with_phases(PhaseSettings::sum(0.0)).with_tone(lower),
        Fig3Run::TwinSum => sim.with_phases(PhaseSettings::sum(0.0)).with_tone(lower).with_tone(upper),
        Fig3Run::TwinDifference => {
            sim.with_phases(PhaseSettings::new(0.0, difference_phi, 0.0)?).with_tone(lower).with_tone(upper)
        }
        Fig3Run::SqueezedSum => sim
            .with_squeezing(op, e1, e2, theta)
            .with_phases(PhaseSettings::sum(0.0))
            .with_tone(lower)
            .with_tone(upper),
        Fig3Run::SqueezedDifference => sim
            .with_squeezing(op, e1, e2, theta)
            .with_phases(PhaseSettings::new(0.0, difference_phi, 0.0)?)
            .with_tone(lower)
            .with_tone(upper),
        Fig3Run::Antisqueezed => sim
            .with_squeezing(op, e1, e2, theta)
            .with_phases(PhaseSettings::sum(FRAC_PI_2))
            .with_tone(lower)
            .with_tone(upper),
    };
    Ok(sim)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3RunSummary {
    pub run: Fig3Run,
    /// Band average relative to the shot run, tone bins notched.
    pub band_average_db: f64,
    /// Lock-in tone power summed over both channels, shot-noise units.
    pub tone_power: f64,
    pub tone_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Summary {
    pub runs: Vec<Fig3RunSummary>,
    pub gain_db: f64,
    pub gain_oracle_db: f64,
    pub cancellation_db: f64,
    pub cancellation_oracle_db: f64,
    pub squeezed_floor_db: f64,
    pub antisqueezed_floor_db: f64,
    pub squeezed_oracle_db: f64,
    pub antisqueezed_oracle_db: f64,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl Fig3Summary {
    pub fn run(&self, run: Fig3Run) -> &Fig3RunSummary {
        self.runs.iter().find(|r| r.run == run).expect("all runs present")
    }
}

fn db_ratio(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (a / b).log10()
    }
}

/// Signal addition, cancellation, squeezing and antisqueezing spectra.
///
/// All spectra are in-phase channel PSDs normalised to the band mean of the
/// shot-noise run.
pub fn reproduce_fig3(cfg: &ExperimentConfig, out: &Path) -> Result<Fig3Summary> {
    let hash = cfg.hash();
    let band = cfg.analysis.band;
    let freq = cfg.carrier.signal_freq;

    let runs: Vec<(Fig3Run, SpectrumRecord, f64)> = Fig3Run::ALL
        .par_iter()
        .map(|&run| {
            let sim = fig3_sim_config(cfg, run)?;
            let ts = synthesize(&sim)?;
            let spec = shot_normalized_psd(&ts.i_inphase, sim.sample_rate, cfg)?;
            let p = lockin_power(&ts.i_inphase, sim.sample_rate, freq)?
                + lockin_power(&ts.i_quadrature, sim.sample_rate, freq)?;
            Ok((run, spec, p))
        })
        .collect::<Result<_>>()?;

    let shot = runs[0].1.clone();
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for (run, spec, tone_power) in &runs {
        let norm = normalize_to_shot(spec, &shot, band)?;
        let notches = notches_for(cfg, &norm, &[freq]);
        let band_average_db = band_average(&norm, band, &notches)?;
        let path = out.join(format!("fig3_{}.csv", run.name()));
        write_file(&path, &spectrum_csv(&hash, &norm, &[("run", run.name().to_string())]))?;
        files.push(path);
        summaries.push(Fig3RunSummary {
            run: *run,
            band_average_db,
            tone_power: *tone_power,
            tone_snr_db: tone_snr(&norm, freq)?,
        });
    }

    let power = |r: Fig3Run| summaries.iter().find(|s| s.run == r).expect("run").tone_power;
    let floor = |r: Fig3Run| summaries.iter().find(|s| s.run == r).expect("run").band_average_db;
    let v = degrade(pure_variances(&cfg.pump.resolve()?)?, &cfg.degradation.resolve()?);
    let (sq_oracle, asq_oracle) = v.to_db();
    let f3 = &cfg.fig3;
    let cancellation_oracle_db = if f3.tone_amplitude > 0.0 {
        cancellation_residual_db(1.0, f3.amplitude_ratio, f3.phi_error)?
    } else {
        0.0
    };
    let gain_oracle_db = if (f3.amplitude_ratio - 1.0).abs() < 1e-12 {
        signal_gain_db(2, PhaseSettings::sum(0.0))?
    } else {
        20.0 * (1.0 + f3.amplitude_ratio).log10()
    };

    let summary = Fig3Summary {
        gain_db: db_ratio(power(Fig3Run::TwinSum), power(Fig3Run::Single)),
        gain_oracle_db,
        cancellation_db: db_ratio(power(Fig3Run::TwinSum), power(Fig3Run::TwinDifference)),
        cancellation_oracle_db,
        squeezed_floor_db: floor(Fig3Run::SqueezedSum),
        antisqueezed_floor_db: floor(Fig3Run::Antisqueezed),
        squeezed_oracle_db: sq_oracle,
        antisqueezed_oracle_db: asq_oracle,
        runs: summaries,
        files: {
            files.push(out.join("fig3_summary.json"));
            files
        },
    };
    write_json(
        &out.join("fig3_summary.json"),
        &json!({
            "config_hash": hash,
            "seed": cfg.simulation.seed,
            "band": band,
            "summary": summary,
        }),
    )?;
    Ok(summary)
}

/// Parses a comma-separated list of pump parameters.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("x grid: `{v}` is not a number")))
        })
        .collect()
}

pub fn apply_band(cfg: &mut ExperimentConfig, band: Band) -> Result<()> {
    cfg.analysis.band = band;
    cfg.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.simulation.duration = 0.25;
        cfg.fig2.duration = 0.5;
        cfg.fig2.x_grid = vec![0.2, 0.4, 0.6];
        cfg.fig2.replicates = 1;
        cfg
    }

    #[test]
    fn budget_examples() {
        let cfg = ExperimentConfig::default();
        let r = budget(&cfg).unwrap();
        let signal = r.iter().find(|p| p.name == "signal").unwrap();
        assert_abs_diff_eq!(signal.efficiency, 0.756, epsilon = 5e-4);
        assert_eq!(signal.agrees, Some(true));
        let sq = r.iter().find(|p| p.name == "squeezing").unwrap();
        assert_abs_diff_eq!(sq.efficiency, 0.656, epsilon = 5e-4);
        assert!(render_budget(&r).contains("signal"));

        let mut empty = cfg.clone();
        empty.budget.components.clear();
        assert!(budget(&empty).is_err());
        let mut bad = cfg;
        bad.paths.insert("broken".into(), vec!["nonexistent".into()]);
        assert!(budget(&bad).unwrap_err().to_string().contains("broken"));
    }

    #[test]
    fn model_curve_examples() {
        let cfg = ExperimentConfig::default();
        let rows = model_curve(&cfg, &[0.65]).unwrap();
        assert_abs_diff_eq!(rows[0].1, -4.045, epsilon = 1e-3);
        assert_abs_diff_eq!(rows[0].2, 11.637, epsilon = 1e-3);
        let mut ideal = cfg.clone();
        ideal.degradation.eta_c = Some(1.0);
        ideal.degradation.xi_prime = Some(0.0);
        ideal.degradation.theta_rms = None;
        let rows = model_curve(&ideal, &[0.0]).unwrap();
        assert_eq!((rows[0].1, rows[0].2), (0.0, 0.0));
        assert!(model_curve(&cfg, &[0.5, 1.0]).is_err());
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("0.1,x").is_err());
    }

    #[test]
    fn simulate_then_spectrum() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick();
        cfg.simulation.squeezing = false;
        let files = simulate(&cfg, dir.path()).unwrap();
        let ts = read_time_series(&files[0]).unwrap();
        assert_eq!(ts.config_hash.as_deref(), Some(cfg.hash().as_str()));
        assert_eq!(ts.sample_rate, Some(200e3));
        assert_eq!(ts.i_inphase.len(), 50_000);
        let s = spectrum(&files[0], &cfg, dir.path()).unwrap();
        assert_abs_diff_eq!(s.band_average_inphase_db, 0.0, epsilon = 0.1);
        assert_abs_diff_eq!(s.band_average_quadrature_db, 0.0, epsilon = 0.1);
        let text = fs::read_to_string(&s.files[0]).unwrap();
        assert!(text.starts_with(&format!("# config_hash={}", cfg.hash())));
    }

    #[test]
    fn spectrum_of_empty_file_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "").unwrap();
        let err = spectrum(&path, &quick(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("empty.csv"), "{err}");
        let missing = dir.path().join("missing.csv");
        let err = spectrum(&missing, &quick(), dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(err.to_string().contains("missing.csv"));
    }

    #[test]
    fn fig2_model_mode_recovers_truth() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick();
        cfg.fig2.mode = Fig2Mode::Model;
        cfg.fig2.x_grid = (2..=9).map(|i| i as f64 / 10.0).collect();
        cfg.fig2.replicates = 3;
        cfg.fig2.noise_db = 0.2;
        let s = reproduce_fig2(&cfg, dir.path()).unwrap();
        assert!(s.eta_c_within_tolerance && s.xi_prime_within_tolerance, "{s:?}");
        for f in &s.files {
            assert!(f.exists());
        }
    }

    #[test]
    fn fig2_simulated_points_follow_the_model() {
        let cfg = quick();
        let data = fig2_dataset(&cfg).unwrap();
        assert_eq!(data.points.len(), 6);
        let d = cfg.degradation.resolve().unwrap();
        for p in &data.points {
            let m = fit::model_db(p.x, p.quadrature, d.eta_c, d.xi_prime).unwrap();
            assert!((p.noise_db - m).abs() < 0.15, "{p:?} vs {m}");
        }
    }

    #[test]
    fn fig3_sim_configs() {
        let cfg = quick();
        let single = fig3_sim_config(&cfg, Fig3Run::Single).unwrap();
        assert_eq!(single.tones.len(), 1);
        assert!(!single.squeezing);
        let anti = fig3_sim_config(&cfg, Fig3Run::Antisqueezed).unwrap();
        assert!(anti.squeezing);
        assert_abs_diff_eq!(anti.phases.theta_sq, FRAC_PI_2);
        let diff = fig3_sim_config(&cfg, Fig3Run::TwinDifference).unwrap();
        assert_abs_diff_eq!(diff.phases.phi, PI);
        assert_ne!(single.seed, anti.seed);
    }
}
