//! Least-squares estimation of common efficiency and effective dephasing
//! from squeezing/antisqueezing-versus-pump data.
//!
//! Residuals are formed in dB. Both quadrature branches share `(η_c, Ξ′)`.
//! The optimizer is a projected Levenberg–Marquardt iteration: each trial
//! step is clipped to `[0, 1] × [0, 0.5]` before it is evaluated, so every
//! accepted iterate is feasible.

use std::collections::BTreeSet;
use std::f64::consts::LN_10;
use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Module};
use crate::squeezing::{
    degrade_raw, effective_dephasing, pure_variances_at, DegradationParams, VariancePair,
};

const LOWER: [f64; 2] = [0.0, 0.0];
const UPPER: [f64; 2] = [1.0, 0.5];
const DB_PER_NEPER: f64 = 10.0 / LN_10;

/// Default starting point.
pub const DEFAULT_INIT: (f64, f64) = (0.7, 1e-4);
/// Additional `Ξ′` seeds tried by the multi-start.
pub const MULTISTART_XI: [f64; 5] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Squeezed,
    Antisqueezed,
}

/// One band-averaged noise measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub quadrature: Quadrature,
    pub noise_db: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SqueezingDataset {
    pub points: Vec<DataPoint>,
    /// Measurements averaged into (or repeated as) each point.
    pub replicates: usize,
}

impl SqueezingDataset {
    pub fn new(points: Vec<DataPoint>, replicates: usize) -> Self {
        SqueezingDataset { points, replicates }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if !(0.0..1.0).contains(&p.x) {
                return Err(Error::InvalidInput(format!("point {i}: x = {} outside [0, 1)", p.x)));
            }
            if !p.noise_db.is_finite() {
                return Err(Error::InvalidInput(format!("point {i}: non-finite noise level")));
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i}: weight must be positive")));
            }
        }
        let distinct: BTreeSet<u64> = self.points.iter().map(|p| p.x.to_bits()).collect();
        if distinct.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "degenerate dataset: {} distinct pump values, need at least 3",
                distinct.len()
            )));
        }
        Ok(())
    }

    /// Both quadrature branches are present.
    pub fn is_joint(&self) -> bool {
        let has = |q| self.points.iter().any(|p| p.quadrature == q);
        has(Quadrature::Squeezed) && has(Quadrature::Antisqueezed)
    }

    /// Reads `x,quadrature,noise_db[,weight]` CSV; `#` lines are comments.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, rec) in rdr.deserialize::<DataPoint>().enumerate() {
            let p = rec.map_err(|e| Error::InvalidInput(format!("dataset row {}: {e}", i + 1)))?;
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        Ok(SqueezingDataset::new(points, 1))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,quadrature,noise_db,weight\n");
        for p in &self.points {
            let q = match p.quadrature {
                Quadrature::Squeezed => "squeezed",
                Quadrature::Antisqueezed => "antisqueezed",
            };
            out.push_str(&format!("{:.6},{q},{:.9},{:.6}\n", p.x, p.noise_db, p.weight));
        }
        out
    }
}

/// Model noise level in dB for one branch.
pub fn model_db(x: f64, quadrature: Quadrature, eta_c: f64, xi_prime: f64) -> Result<f64> {
    let v = degrade_raw(pure_variances_at(x)?, eta_c, xi_prime);
    Ok(10.0
        * match quadrature {
            Quadrature::Squeezed => v.v_minus,
            Quadrature::Antisqueezed => v.v_plus,
        }
        .log10())
}

/// Squeezed and antisqueezed model curves, dB, over `xs`.
pub fn model_curve(d: &DegradationParams, xs: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    xs.iter()
        .map(|&x| {
            let v = degrade_raw(pure_variances_at(x)?, d.eta_c, d.xi_prime);
            let (sq, asq) = v.to_db();
            Ok((x, sq, asq))
        })
        .collect()
}

/// Forward-model dataset with optional Gaussian dB noise on every replicate.
///
/// Each replicate is a separate point of unit weight.
pub fn synthetic_dataset(
    eta_c: f64,
    xi_prime: f64,
    xs: &[f64],
    replicates: usize,
    noise_db: f64,
    seed: u64,
) -> Result<SqueezingDataset> {
    let mut rng = rng::stream(seed, Module::Dataset, 0, 0);
    let noise = Normal::new(0.0, noise_db.max(0.0))
        .map_err(|_| Error::param("noise_db", noise_db, "must be finite"))?;
    let mut points = Vec::with_capacity(xs.len() * 2 * replicates);
    for &x in xs {
        for quadrature in [Quadrature::Squeezed, Quadrature::Antisqueezed] {
            let truth = model_db(x, quadrature, eta_c, xi_prime)?;
            for _ in 0..replicates {
                let e = if noise_db > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                points.push(DataPoint { x, quadrature, noise_db: truth + e, weight: 1.0 });
            }
        }
    }
    Ok(SqueezingDataset::new(points, replicates))
}

/// Estimate with (possibly asymmetric) one-sigma errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub value: f64,
    pub err_minus: f64,
    pub err_plus: f64,
}

impl ParamEstimate {
    pub fn symmetric(value: f64, err: f64) -> Self {
        ParamEstimate { value, err_minus: err, err_plus: err }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.err_minus
    }

    pub fn upper(&self) -> f64 {
        self.value + self.err_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub eta_c_std: f64,
    pub xi_prime_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub eta_c: ParamEstimate,
    /// Errors from the profile-likelihood scan.
    pub xi_prime: ParamEstimate,
    /// Symmetric `Ξ′` error from the Jacobian covariance.
    pub xi_prime_cov_err: f64,
    /// `sqrt(Σ w·r²)` in dB.
    pub residual_norm: f64,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    pub bootstrap: Option<BootstrapSummary>,
}

impl FitResult {
    pub fn degradation(&self) -> Result<DegradationParams> {
        DegradationParams::from_fit(self.eta_c.value, self.xi_prime.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub init: Option<(f64, f64)>,
    pub max_iter: usize,
    pub multistart: bool,
    pub profile: bool,
    /// `(replicas, seed)` for case-resampling bootstrap.
    pub bootstrap: Option<(usize, u64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { init: None, max_iter: 500, multistart: true, profile: true, bootstrap: None }
    }
}

struct Problem<'a> {
    points: &'a [DataPoint],
    pure: Vec<VariancePair>,
}

impl<'a> Problem<'a> {
    fn new(data: &'a SqueezingDataset) -> Result<Self> {
        let pure = data.points.iter().map(|p| pure_variances_at(p.x)).collect::<Result<_>>()?;
        Ok(Problem { points: &data.points, pure })
    }

    /// Weighted residuals and their Jacobian rows.
    fn eval(&self, p: [f64; 2], jac: bool) -> (Vec<f64>, Vec<[f64; 2]>) {
        let [eta, xi] = p;
        let mut r = Vec::with_capacity(self.points.len());
        let mut j = Vec::with_capacity(if jac { self.points.len() } else { 0 });
        for (pt, v) in self.points.iter().zip(&self.pure) {
            let (a, b) = match pt.quadrature {
                Quadrature::Squeezed => (v.v_minus, v.v_plus),
                Quadrature::Antisqueezed => (v.v_plus, v.v_minus),
            };
            let mixed = (1.0 - xi) * a + xi * b;
            let vp = eta * mixed + 1.0 - eta;
            let sw = pt.weight.sqrt();
            r.push(sw * (DB_PER_NEPER * vp.ln() - pt.noise_db));
            if jac {
                j.push([sw * DB_PER_NEPER * (mixed - 1.0) / vp, sw * DB_PER_NEPER * eta * (b - a) / vp]);
            }
        }
        (r, j)
    }

    fn chi2(&self, p: [f64; 2]) -> f64 {
        self.eval(p, false).0.iter().map(|v| v * v).sum()
    }
}

struct LmOutcome {
    params: [f64; 2],
    chi2: f64,
    iterations: usize,
    converged: bool,
}

fn project(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(LOWER[0], UPPER[0]), p[1].clamp(LOWER[1], UPPER[1])]
}

/// Projected Levenberg–Marquardt with Marquardt diagonal scaling.
///
/// `free` masks which parameters move. `on_accept` sees every accepted iterate.
fn lm_minimize(
    prob: &Problem,
    start: [f64; 2],
    free: [bool; 2],
    max_iter: usize,
    mut on_accept: impl FnMut([f64; 2]),
) -> LmOutcome {
    let mut p = project(start);
    let mut chi2 = prob.chi2(p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let (r, j) = prob.eval(p, true);
        let mut a = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for (ri, ji) in r.iter().zip(&j) {
            for u in 0..2 {
                g[u] += ji[u] * ri;
                for v in 0..2 {
                    a[u][v] += ji[u] * ji[v];
                }
            }
        }
        for u in 0..2 {
            if !free[u] {
                g[u] = 0.0;
                for v in 0..2 {
                    a[u][v] = 0.0;
                    a[v][u] = 0.0;
                }
                a[u][u] = 1.0;
            }
        }
        // projected gradient: components pushing against an active bound do not count
        let pg: f64 = (0..2)
            .filter(|&u| free[u])
            .filter(|&u| !((p[u] <= LOWER[u] && g[u] > 0.0) || (p[u] >= UPPER[u] && g[u] < 0.0)))
            .map(|u| (g[u] * g[u]) / a[u][u].max(1e-300))
            .sum();
        if pg <= 1e-24 * (1.0 + chi2) {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut m = a;
            for u in 0..2 {
                m[u][u] += lambda * a[u][u].max(1e-300);
            }
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step = [-(m[1][1] * g[0] - m[0][1] * g[1]) / det, -(m[0][0] * g[1] - m[1][0] * g[0]) / det];
            let trial = project([p[0] + step[0], p[1] + step[1]]);
            let trial_chi2 = prob.chi2(trial);
            if trial_chi2 < chi2 {
                let moved = (0..2).map(|u| (trial[u] - p[u]).abs()).fold(0.0, f64::max);
                let drop = chi2 - trial_chi2;
                p = trial;
                chi2 = trial_chi2;
                on_accept(p);
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if moved < 1e-15 || drop <= 1e-16 * chi2 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left inside the box
            converged = true;
        }
        if converged {
            break;
        }
    }
    LmOutcome { params: p, chi2, iterations, converged }
}

fn covariance(prob: &Problem, p: [f64; 2], s2: f64) -> [[f64; 2]; 2] {
    let (_, j) = prob.eval(p, true);
    let mut a = [[0.0; 2]; 2];
    for ji in &j {
        for u in 0..2 {
            for v in 0..2 {
                a[u][v] += ji[u] * ji[v];
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 {
        return [[f64::INFINITY, 0.0], [0.0, f64::INFINITY]];
    }
    [[s2 * a[1][1] / det, -s2 * a[0][1] / det], [-s2 * a[1][0] / det, s2 * a[0][0] / det]]
}

/// Profile of χ² in `Ξ′`, minimised over `η_c`.
fn profile_chi2(prob: &Problem, xi: f64, eta_start: f64) -> (f64, f64) {
    let out = lm_minimize(prob, [eta_start, xi], [true, false], 200, |_| {});
    (out.chi2, out.params[0])
}

/// Asymmetric `Ξ′` interval where the profile rises by one residual variance.
fn profile_bounds(prob: &Problem, best: [f64; 2], chi2_min: f64, s2: f64, scale: f64) -> (f64, f64) {
    if s2 <= 0.0 {
        return (best[1], best[1]);
    }
    let target = chi2_min + s2;
    let excess = |xi: f64| profile_chi2(prob, xi, best[0]).0 - target;

    let search = |toward: f64| -> f64 {
        let limit = if toward > 0.0 { UPPER[1] } else { LOWER[1] };
        if best[1] == limit {
            return limit;
        }
        let mut inside = best[1];
        let mut step = scale.max(1e-9);
        loop {
            let probe = (best[1] + toward * step).clamp(LOWER[1], UPPER[1]);
            if excess(probe) > 0.0 {
                let mut outside = probe;
                for _ in 0..60 {
                    let mid = 0.5 * (inside + outside);
                    if excess(mid) > 0.0 {
                        outside = mid;
                    } else {
                        inside = mid;
                    }
                    if (outside - inside).abs() <= 1e-4 * step.min(scale.max(1e-9)) {
                        break;
                    }
                }
                return 0.5 * (inside + outside);
            }
            if probe == limit {
                return limit;
            }
            inside = probe;
            step *= 2.0;
        }
    };
    (search(-1.0), search(1.0))
}

fn fit_core<'a>(data: &'a SqueezingDataset, opts: &FitOptions) -> Result<(LmOutcome, Problem<'a>)> {
    data.validate()?;
    let prob = Problem::new(data)?;
    let init = opts.init.unwrap_or(DEFAULT_INIT);
    for (name, v, hi) in [("eta_c", init.0, UPPER[0]), ("xi_prime", init.1, UPPER[1])] {
        if !(0.0..=hi).contains(&v) {
            return Err(Error::param(name, v, "initial value outside parameter bounds"));
        }
    }
    let mut starts = vec![[init.0, init.1]];
    if opts.multistart {
        starts.extend(MULTISTART_XI.iter().map(|&xi| [init.0, xi]));
    }
    let mut best: Option<LmOutcome> = None;
    let mut total_iter = 0;
    for s in starts {
        let out = lm_minimize(&prob, s, [true, true], opts.max_iter, |_| {});
        total_iter += out.iterations;
        let better = match &best {
            None => true,
            Some(b) => out.chi2 < b.chi2,
        };
        if better {
            best = Some(out);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total_iter;
    Ok((best, prob))
}

/// Fits `(η_c, Ξ′)` to `data`.
///
/// Errors: `η_c` from the Jacobian covariance scaled by the residual
/// variance; `Ξ′` from a profile-likelihood scan (asymmetric). Optionally a
/// case-resampling bootstrap runs alongside.
pub fn fit_dephasing_model(data: &SqueezingDataset, opts: &FitOptions) -> Result<FitResult> {
    let (best, prob) = fit_core(data, opts)?;
    let m = data.points.len();
    let dof = m.saturating_sub(2);
    let s2 = if dof > 0 { best.chi2 / dof as f64 } else { 0.0 };
    let cov = covariance(&prob, best.params, s2);
    let eta_err = cov[0][0].max(0.0).sqrt();
    let xi_cov_err = cov[1][1].max(0.0).sqrt();

    let xi_prime = if opts.profile {
        let scale = if xi_cov_err.is_finite() && xi_cov_err > 0.0 { xi_cov_err } else { 1e-6 };
        let (lo, hi) = profile_bounds(&prob, best.params, best.chi2, s2, scale);
        ParamEstimate {
            value: best.params[1],
            err_minus: (best.params[1] - lo).max(0.0),
            err_plus: (hi - best.params[1]).max(0.0),
        }
    } else {
        ParamEstimate {
            value: best.params[1],
            err_minus: xi_cov_err.min(best.params[1]),
            err_plus: xi_cov_err,
        }
    };

    let bootstrap = match opts.bootstrap {
        Some((replicas, seed)) if replicas >= 2 => Some(bootstrap(data, opts, replicas, seed)?),
        _ => None,
    };

    Ok(FitResult {
        eta_c: ParamEstimate::symmetric(best.params[0], eta_err),
        xi_prime,
        xi_prime_cov_err: xi_cov_err,
        residual_norm: best.chi2.sqrt(),
        dof,
        iterations: best.iterations,
        converged: best.converged,
        bootstrap,
    })
}

fn bootstrap(
    data: &SqueezingDataset,
    opts: &FitOptions,
    replicas: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let inner = FitOptions { profile: false, bootstrap: None, ..*opts };
    let fits: Vec<[f64; 2]> = (0..replicas)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = rng::stream(seed, Module::Bootstrap, 0, b as u64);
            let n = data.points.len();
            let points = (0..n).map(|_| data.points[rng.gen_range(0..n)]).collect();
            let resampled = SqueezingDataset::new(points, data.replicates);
            // resamples with fewer than three distinct pump values are skipped
            fit_core(&resampled, &inner).ok().map(|(o, _)| o.params)
        })
        .collect();
    if fits.len() < 2 {
        return Err(Error::InvalidInput("too few usable bootstrap replicas".into()));
    }
    let std = |k: usize| {
        let n = fits.len() as f64;
        let mean = fits.iter().map(|f| f[k]).sum::<f64>() / n;
        (fits.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(BootstrapSummary { replicas: fits.len(), eta_c_std: std(0), xi_prime_std: std(1) })
}

/// Per-mode efficiencies recovered from fitted dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPair {
    pub eta1: f64,
    pub eta2: f64,
    pub eta1_err: f64,
    pub eta2_err: f64,
    /// Differential-loss dephasing left after removing phase noise.
    pub xi: f64,
}

/// Splits `η_c` into `η₁ ≤ η₂` given the phase-noise share of `Ξ′`.
pub fn invert_dephasing_params(eta_c: f64, xi_prime: f64, theta_rms: f64) -> Result<(f64, f64, f64)> {
    if !(eta_c > 0.0 && eta_c <= 1.0) {
        return Err(Error::param("eta_c", eta_c, "must lie in (0, 1]"));
    }
    if !(theta_rms >= 0.0 && 2.0 * theta_rms * theta_rms < 1.0) {
        return Err(Error::param("theta_rms", theta_rms, "must satisfy 0 <= 2θ² < 1"));
    }
    let t2 = theta_rms * theta_rms;
    let mut xi = (xi_prime - t2) / (1.0 - 2.0 * t2);
    if xi < 0.0 {
        if xi > -1e-15 {
            xi = 0.0;
        } else {
            return Err(Error::PhaseNoiseDominated { implied_xi: xi });
        }
    }
    let c = 1.0 - 2.0 * xi;
    let disc = eta_c * eta_c * (1.0 - c * c);
    if disc < 0.0 {
        return Err(Error::param("xi", xi, "dephasing outside [0, 0.5]"));
    }
    let half_gap = disc.sqrt();
    Ok((eta_c - half_gap, eta_c + half_gap, xi))
}

/// [`invert_dephasing_params`] on a fit, with first-order error propagation.
///
/// The `Ξ′` contribution is taken as the larger excursion over the fit's
/// asymmetric interval, with the implied `Ξ` clamped at zero.
pub fn invert_dephasing(fit: &FitResult, assumed_theta_rms: f64) -> Result<EfficiencyPair> {
    let (eta_c, xi_p) = (fit.eta_c.value, fit.xi_prime.value);
    let (e1, e2, xi) = invert_dephasing_params(eta_c, xi_p, assumed_theta_rms)?;

    let clamped = |ec: f64, xp: f64| -> Result<(f64, f64)> {
        let t2 = assumed_theta_rms * assumed_theta_rms;
        let xp = xp.max(t2);
        invert_dephasing_params(ec.clamp(1e-12, 1.0), xp, assumed_theta_rms).map(|(a, b, _)| (a, b))
    };
    let de = fit.eta_c.err_plus;
    let (a_hi, b_hi) = clamped(eta_c + de, xi_p)?;
    let (a_lo, b_lo) = clamped(eta_c - de, xi_p)?;
    let d_eta = (0.5 * (a_hi - a_lo).abs(), 0.5 * (b_hi - b_lo).abs());
    let (a_up, b_up) = clamped(eta_c, fit.xi_prime.upper())?;
    let (a_dn, b_dn) = clamped(eta_c, fit.xi_prime.lower())?;
    let d_xi = ((a_up - e1).abs().max((a_dn - e1).abs()), (b_up - e2).abs().max((b_dn - e2).abs()));
    Ok(EfficiencyPair {
        eta1: e1,
        eta2: e2,
        eta1_err: d_eta.0.hypot(d_xi.0),
        eta2_err: d_eta.1.hypot(d_xi.1),
        xi,
    })
}

/// Phase-noise estimate with bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// RMS phase noise implied by a fit, `θ = √((Ξ′ − Ξ)/(1 − 2Ξ))`.
///
/// Bounds follow the fit's `Ξ′` interval. Negative radicands clamp to zero.
pub fn theta_rms_from_fit(fit: &FitResult, assumed_xi: f64) -> Result<ThetaEstimate> {
    theta_rms_from_interval(fit.xi_prime, assumed_xi)
}

pub fn theta_rms_from_interval(xi_prime: ParamEstimate, assumed_xi: f64) -> Result<ThetaEstimate> {
    if !(0.0..0.5).contains(&assumed_xi) {
        return Err(Error::param("assumed_xi", assumed_xi, "must lie in [0, 0.5)"));
    }
    if xi_prime.value < 0.0 {
        return Err(Error::param("xi_prime", xi_prime.value, "must be non-negative"));
    }
    let theta = |xp: f64| ((xp - assumed_xi) / (1.0 - 2.0 * assumed_xi)).max(0.0).sqrt();
    let est = ThetaEstimate {
        value: theta(xi_prime.value),
        lower: theta(xi_prime.lower()),
        upper: theta(xi_prime.upper()),
    };
    debug_assert!(effective_dephasing(assumed_xi, est.value).is_ok());
    Ok(est)
}
