//! Decay diagnostics for perturbed fronts: weighted difference norms, local
//! wake phase, power-law fits and the twin-run perturbation experiment.
//!
//! The reference front is self-generated. A comoving run settles from a
//! localized seed; the settled state is then integrated twice in lockstep,
//! once as is and once with a small bump added. The difference between the two
//! runs is the perturbation, so the slow drift of the settling front itself
//! cancels.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve, Matrix};
use crate::model::{weight_eval, ModelParams, WeightSpec};
use crate::simulate::{
    extract_wake_wavenumber, front_position, run_invasion, Fields, Grid, Seed, SimConfig, SimulateError, Simulation,
    SimulationRun, WakeWavenumber, CSV_HEADER,
};
use crate::wavetrain::WaveTrain;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("grid mismatch: expected {expected} points, found {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("insufficient data: {have} usable samples in the fit window, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("phase unwrap failure at x = {x}: {reason}")]
    PhaseUnwrapFailure { x: f64, reason: String },
    #[error("no front found at t = {t}")]
    NoFront { t: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// Minimum number of samples for a power-law fit.
pub const MIN_FIT_SAMPLES: usize = 5;

/// Weighted norms of a single difference field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    pub linf: f64,
    pub l2: f64,
    /// `sup_{xi >= 1} omega(xi) / (1 + xi) |d(xi)|`, the leading-edge functional.
    pub refined: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub linf: Vec<f64>,
    pub l2: Vec<f64>,
    pub refined: Vec<f64>,
}

impl NormSeries {
    pub fn push(&mut self, t: f64, n: WeightedNorms) {
        self.t.push(t);
        self.linf.push(n.linf);
        self.l2.push(n.l2);
        self.refined.push(n.refined);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\nt,linf,l2,refined\n");
        for i in 0..self.len() {
            s.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                self.t[i], self.linf[i], self.l2[i], self.refined[i]
            ));
        }
        s
    }
}

/// Right end of the region where norms are measured: the sponge edge, or the
/// right boundary when there is no sponge.
pub fn measure_limit(grid: &Grid) -> f64 {
    grid.sponge_start()
}

fn check_len(grid: &Grid, f: &Fields) -> Result<()> {
    let np = grid.points();
    if f.u.len() != np || f.w.len() != np {
        return Err(DiagnosticsError::GridMismatch {
            expected: np,
            found: f.u.len().min(f.w.len()),
        });
    }
    Ok(())
}

/// Norms of `omega(x - anchor) (d_u, d_w)` over `x <= x_max`, where the pointwise
/// size is `max(|d_u|, |d_w|)` and the L2 norm sums both components.
pub fn norms_of(grid: &Grid, d: &Fields, weight: &WeightSpec<f64>, anchor: f64, x_max: f64) -> Result<WeightedNorms> {
    check_len(grid, d)?;
    let mut n = WeightedNorms::default();
    let mut sq = 0.0;
    for j in 0..grid.points() {
        let x = grid.x(j);
        if x > x_max {
            break;
        }
        let xi = x - anchor;
        let om = weight_eval(weight, xi);
        let a = d.u[j].abs().max(d.w[j].abs());
        n.linf = n.linf.max(om * a);
        sq += om * om * (d.u[j] * d.u[j] + d.w[j] * d.w[j]);
        if xi >= 1.0 {
            n.refined = n.refined.max(om * a / (1.0 + xi));
        }
    }
    n.l2 = (sq * grid.dx).sqrt();
    Ok(n)
}

/// Weighted norms of `a - b`.
pub fn difference_norms(
    grid: &Grid,
    a: &Fields,
    b: &Fields,
    weight: &WeightSpec<f64>,
    anchor: f64,
    x_max: f64,
) -> Result<WeightedNorms> {
    check_len(grid, a)?;
    check_len(grid, b)?;
    let d = Fields {
        u: a.u.iter().zip(&b.u).map(|(p, q)| p - q).collect(),
        w: a.w.iter().zip(&b.w).map(|(p, q)| p - q).collect(),
    };
    norms_of(grid, &d, weight, anchor, x_max)
}

/// Norms of `omega (u(t) - u_ref)` for every stored output of `run`, with the
/// weight anchored at the front of the reference state.
pub fn weighted_norms(run: &SimulationRun, reference: &Fields, weight: &WeightSpec<f64>) -> Result<NormSeries> {
    let grid = &run.grid;
    check_len(grid, reference)?;
    let anchor = front_position(grid, &reference.u, 0.5 * run.params.a).unwrap_or(grid.x0);
    let x_max = measure_limit(grid);
    let mut out = NormSeries::default();
    for (t, f) in run.times.iter().zip(&run.fields) {
        out.push(*t, difference_norms(grid, f, reference, weight, anchor, x_max)?);
    }
    Ok(out)
}

/// Least-squares fit of `log y = log A + p log(1 + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub stderr: f64,
    /// 95% interval for the exponent (normal approximation).
    pub ci95: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

impl DecayFit {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.exponent >= lo && self.exponent <= hi
    }
}

/// Fit the samples with `t` in `window` and finite positive `y`.
pub fn fit_decay(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(DiagnosticsError::Invalid(format!(
            "{} times but {} values",
            t.len(),
            y.len()
        )));
    }
    let (a, b) = window;
    if !(a < b) || a <= -1.0 {
        return Err(DiagnosticsError::Invalid(format!("fit window ({a}, {b})")));
    }
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(t, y)| **t >= a && **t <= b && y.is_finite() && **y > 0.0)
        .map(|(t, y)| ((1.0 + t).ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData {
            have: n,
            need: MIN_FIT_SAMPLES,
        });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(DiagnosticsError::InsufficientData {
            have: 1,
            need: MIN_FIT_SAMPLES,
        });
    }
    let p = sxy / sxx;
    let c = my - p * mx;
    let sse: f64 = pts.iter().map(|q| (q.1 - c - p * q.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit {
        exponent: p,
        prefactor: c.exp(),
        stderr,
        ci95: (p - 1.96 * stderr, p + 1.96 * stderr),
        r_squared,
        samples: n,
        window,
    })
}

/// `n` logarithmically spaced instants spanning `window`.
pub fn log_spaced(window: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = window;
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Value of the sample nearest to each requested instant.
pub fn sample_nearest(t: &[f64], y: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&s| {
            let i = t
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
                .map_or(0, |(i, _)| i);
            y.get(i).copied().unwrap_or(f64::NAN)
        })
        .collect()
}

/// Running maximum over the centred window `[t - period/2, t + period/2]`.
///
/// Norms dominated by the wake oscillate as the modulation travels through
/// the pattern; the envelope removes that oscillation before fitting.
pub fn period_max_envelope(t: &[f64], y: &[f64], period: f64) -> Vec<f64> {
    let h = 0.5 * period;
    let mut out = Vec::with_capacity(t.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    for &s in t {
        while lo < t.len() && t[lo] < s - h {
            lo += 1;
        }
        while hi < t.len() && t[hi] <= s + h {
            hi += 1;
        }
        out.push(y[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    out
}

/// Fit at `n` log-spaced instants of `window`, optionally after taking the
/// period-max envelope. Instants whose envelope window would run past the end
/// of the series are rejected.
pub fn fit_sampled(t: &[f64], y: &[f64], window: (f64, f64), n: usize, envelope: Option<f64>) -> Result<DecayFit> {
    let last = t.last().copied().unwrap_or(f64::NEG_INFINITY);
    if let Some(period) = envelope {
        if window.1 + 0.5 * period > last + 1e-9 {
            return Err(DiagnosticsError::Invalid(format!(
                "series ends at t = {last}, envelope needs t = {}",
                window.1 + 0.5 * period
            )));
        }
    }
    let ys = match envelope {
        Some(period) => period_max_envelope(t, y, period),
        None => y.to_vec(),
    };
    let at = log_spaced(window, n);
    let vals = sample_nearest(t, &ys, &at);
    fit_decay(&at, &vals, window)
}

/// Wave-train profile tabulated for fast cubic Hermite evaluation.
#[derive(Debug, Clone)]
pub struct PhaseTemplate {
    l: f64,
    h: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    du: Vec<f64>,
    dw: Vec<f64>,
}

fn hermite(f: &[f64], df: &[f64], i: usize, s: f64, h: f64) -> (f64, f64) {
    let n = f.len();
    let j = (i + 1) % n;
    let (p0, p1, m0, m1) = (f[i], f[j], df[i] * h, df[j] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
    let d = (6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * m1;
    (v, d / h)
}

impl PhaseTemplate {
    pub fn new(wt: &WaveTrain) -> Self {
        let fine = wt.resample(wt.n().max(4096));
        Self {
            l: fine.l,
            h: fine.l / fine.n() as f64,
            u: fine.u,
            w: fine.w,
            du: fine.du,
            dw: fine.dw,
        }
    }

    pub fn period(&self) -> f64 {
        self.l
    }

    /// `(u, w, u', w')` at `xi`.
    pub fn eval(&self, xi: f64) -> [f64; 4] {
        let r = xi.rem_euclid(self.l) / self.h;
        let i = (r.floor() as usize).min(self.u.len() - 1);
        let s = r - i as f64;
        let (u, du) = hermite(&self.u, &self.du, i, s, self.h);
        let (w, dw) = hermite(&self.w, &self.dw, i, s, self.h);
        [u, w, du, dw]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptions {
    /// Distance between window centres, as a fraction of the period.
    pub spacing: f64,
    /// Shifts tried before the Gauss–Newton refinement.
    pub coarse_shifts: usize,
    /// Windows whose best normalized correlation with the template falls below
    /// this are rejected.
    pub min_correlation: f64,
    /// Half-width (in windows) of the moving-average low-pass; 0 disables it.
    pub smoothing: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            spacing: 0.125,
            coarse_shifts: 48,
            min_correlation: 0.9,
            smoothing: 0,
        }
    }
}

/// Local phase of one snapshot: `u(x) ~ u_wt(x - psi(x))` near each centre.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LocalPhase {
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    pub correlation: Vec<f64>,
}

impl LocalPhase {
    /// Piecewise-linear value at `x`, held constant beyond the end centres.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.x[0] {
            return self.psi[0];
        }
        if x >= self.x[n - 1] {
            return self.psi[n - 1];
        }
        let i = self.x.partition_point(|&c| c <= x) - 1;
        let s = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.psi[i] + s * (self.psi[i + 1] - self.psi[i])
    }
}

fn fit_window(grid: &Grid, f: &Fields, tmpl: &PhaseTemplate, ja: usize, jb: usize, coarse: usize) -> (f64, f64) {
    let l = tmpl.l;
    let misfit = |d: f64| -> f64 {
        (ja..jb)
            .map(|j| {
                let v = tmpl.eval(grid.x(j) - d);
                (f.u[j] - v[0]).powi(2) + (f.w[j] - v[1]).powi(2)
            })
            .sum()
    };
    let mut best = (0.0, f64::INFINITY);
    for m in 0..coarse {
        let d = l * m as f64 / coarse as f64;
        let e = misfit(d);
        if e < best.1 {
            best = (d, e);
        }
    }
    let mut d = best.0;
    for _ in 0..30 {
        let (mut num, mut den) = (0.0, 0.0);
        for j in ja..jb {
            let v = tmpl.eval(grid.x(j) - d);
            let (ru, rw) = (f.u[j] - v[0], f.w[j] - v[1]);
            num += ru * v[2] + rw * v[3];
            den += v[2] * v[2] + v[3] * v[3];
        }
        if !(den > 0.0) {
            break;
        }
        let step = (-num / den).clamp(-0.1 * l, 0.1 * l);
        d += step;
        if step.abs() < 1e-12 * l {
            break;
        }
    }
    // normalized correlation of the u components at the optimum
    let m = (jb - ja) as f64;
    let tv: Vec<f64> = (ja..jb).map(|j| tmpl.eval(grid.x(j) - d)[0]).collect();
    let mu = f.u[ja..jb].iter().sum::<f64>() / m;
    let mt = tv.iter().sum::<f64>() / m;
    let (mut suv, mut suu, mut stt) = (0.0, 0.0, 0.0);
    for (k, j) in (ja..jb).enumerate() {
        let (a, b) = (f.u[j] - mu, tv[k] - mt);
        suv += a * b;
        suu += a * a;
        stt += b * b;
    }
    let rho = if suu > 0.0 && stt > 0.0 {
        suv / (suu * stt).sqrt()
    } else {
        0.0
    };
    (d, rho)
}

/// Local phase on `[x_a, x_b]` from least-squares template matching in
/// windows of one period, unwrapped along `x`.
pub fn local_phase(
    grid: &Grid,
    f: &Fields,
    tmpl: &PhaseTemplate,
    window: (f64, f64),
    opts: &PhaseOptions,
) -> Result<LocalPhase> {
    check_len(grid, f)?;
    let l = tmpl.l;
    let (xa, xb) = (window.0.max(grid.x0), window.1.min(grid.x1));
    if xb - xa < l {
        return Err(DiagnosticsError::Invalid(format!(
            "phase window [{xa}, {xb}] is shorter than one period {l}"
        )));
    }
    if !(opts.spacing > 0.0) || opts.coarse_shifts < 4 {
        return Err(DiagnosticsError::Invalid("phase options".into()));
    }
    let step = opts.spacing * l;
    let count = ((xb - xa - l) / step).floor() as usize + 1;
    let mut out = LocalPhase::default();
    for k in 0..count {
        let xc = xa + 0.5 * l + k as f64 * step;
        let ja = ((xc - 0.5 * l - grid.x0) / grid.dx).ceil().max(0.0) as usize;
        let jb = (((xc + 0.5 * l - grid.x0) / grid.dx).floor() as usize + 1).min(grid.points());
        let (d, rho) = fit_window(grid, f, tmpl, ja, jb, opts.coarse_shifts);
        if !(rho >= opts.min_correlation) {
            return Err(DiagnosticsError::PhaseUnwrapFailure {
                x: xc,
                reason: format!("template correlation {rho:.3} below {}", opts.min_correlation),
            });
        }
        let d = match out.psi.last() {
            Some(&prev) => d - l * ((d - prev) / l).round(),
            None => d,
        };
        if let Some(&prev) = out.psi.last() {
            if (d - prev).abs() > 0.25 * l {
                return Err(DiagnosticsError::PhaseUnwrapFailure {
                    x: xc,
                    reason: format!("phase jump {:.3} between neighbouring windows", d - prev),
                });
            }
        }
        out.x.push(xc);
        out.psi.push(d);
        out.correlation.push(rho);
    }
    if opts.smoothing > 0 {
        out.psi = moving_average(&out.psi, opts.smoothing);
    }
    Ok(out)
}

fn moving_average(v: &[f64], half: usize) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(half), (i + half + 1).min(n));
            v[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Phase `psi(x, t)` on a fixed set of window centres, unwrapped along `x`
/// and `t`, with centred-difference derivatives.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseField {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub psi_x: Vec<Vec<f64>>,
    pub psi_t: Vec<Vec<f64>>,
    pub min_correlation: f64,
}

fn centred(v: &[f64], h: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                return 0.0;
            }
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[b] - v[a]) / (h[b] - h[a])
        })
        .collect()
}

/// Phase of every stored output of `run` on the wake window `[x_a, x_b]`,
/// which must hold at least five periods.
pub fn extract_phase(
    run: &SimulationRun,
    wt: &WaveTrain,
    window: (f64, f64),
    opts: &PhaseOptions,
) -> Result<PhaseField> {
    let tmpl = PhaseTemplate::new(wt);
    let l = tmpl.l;
    if window.1 - window.0 < 5.0 * l {
        return Err(DiagnosticsError::Invalid(format!(
            "wake window of length {} holds fewer than five periods of {l}",
            window.1 - window.0
        )));
    }
    let mut pf = PhaseField {
        min_correlation: 1.0,
        ..Default::default()
    };
    for (t, f) in run.times.iter().zip(&run.fields) {
        let mut lp = local_phase(&run.grid, f, &tmpl, window, opts)?;
        if let Some(prev) = pf.psi.last() {
            let mean = lp.psi.iter().zip(prev).map(|(a, b)| a - b).sum::<f64>() / lp.psi.len() as f64;
            let shift = l * (mean / l).round();
            lp.psi.iter_mut().for_each(|p| *p -= shift);
        }
        pf.min_correlation = lp.correlation.iter().copied().fold(pf.min_correlation, f64::min);
        pf.x = lp.x;
        pf.times.push(*t);
        pf.psi.push(lp.psi);
    }
    pf.psi_x = pf.psi.iter().map(|row| centred(row, &pf.x)).collect();
    let nt = pf.times.len();
    pf.psi_t = (0..nt)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(nt.saturating_sub(1)));
            (0..pf.x.len())
                .map(|i| {
                    if b > a {
                        (pf.psi[b][i] - pf.psi[a][i]) / (pf.times[b] - pf.times[a])
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(pf)
}

/// Four-point Lagrange interpolation of a grid field at `x` (clamped).
fn interp(grid: &Grid, f: &[f64], x: f64) -> f64 {
    let n = f.len();
    let r = ((x - grid.x0) / grid.dx).clamp(0.0, (n - 1) as f64);
    let i = (r.floor() as usize).clamp(1, n.saturating_sub(3));
    let s = r - i as f64;
    let (a, b, c, d) = (f[i - 1], f[i], f[i + 1], f[i + 2]);
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w0 * a + w1 * b + w2 * c + w3 * d
}

/// Phase offset profile that follows `dpsi` in the wake, ramps smoothly to
/// zero over `[x_cut - ramp, x_cut]` and vanishes ahead of `x_cut`.
pub fn phase_profile(dpsi: &LocalPhase, x_cut: f64, ramp: f64) -> impl Fn(f64) -> f64 + '_ {
    move |x: f64| {
        if x >= x_cut {
            return 0.0;
        }
        let s = ((x_cut - x) / ramp).min(1.0);
        let chi = s * s * (3.0 - 2.0 * s);
        chi * dpsi.at(x)
    }
}

/// Inverse-modulated difference `a(x + psi(x)) - b(x)`.
pub fn modulated_difference(grid: &Grid, a: &Fields, b: &Fields, psi: impl Fn(f64) -> f64) -> Fields {
    let np = grid.points();
    let mut d = Fields::zeros(np);
    for j in 0..np {
        let x = grid.x(j);
        let y = x + psi(x);
        d.u[j] = interp(grid, &a.u, y) - b.u[j];
        d.w[j] = interp(grid, &a.w, y) - b.w[j];
    }
    d
}

/// Forward-modulated difference `a(x) - b(x - psi(x))`.
pub fn forward_modulated_difference(grid: &Grid, a: &Fields, b: &Fields, psi: impl Fn(f64) -> f64) -> Fields {
    let np = grid.points();
    let mut d = Fields::zeros(np);
    for j in 0..np {
        let x = grid.x(j);
        let y = x - psi(x);
        d.u[j] = a.u[j] - interp(grid, &b.u, y);
        d.w[j] = a.w[j] - interp(grid, &b.w, y);
    }
    d
}

/// Setup of the twin-run perturbation experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayExperimentConfig {
    pub params: ModelParams<f64>,
    pub frame_speed: f64,
    /// Weight rate `eta` of `omega = e^{eta xi}` ahead of the front.
    pub eta: f64,
    pub x0: f64,
    pub x1: f64,
    pub cells: usize,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub settle_time: f64,
    pub settle_amplitude: f64,
    pub settle_width: f64,
    pub amplitude: f64,
    pub width: f64,
    /// Bump centre relative to the settled front.
    pub offset: f64,
    pub sample_interval: f64,
    pub window: (f64, f64),
    pub fit_samples: usize,
    /// Envelope period for the wake-dominated norms, `L / |c_g|`.
    pub envelope_period: f64,
    pub phase: PhaseOptions,
}

impl DecayExperimentConfig {
    pub fn new(params: ModelParams<f64>, frame_speed: f64, eta: f64, envelope_period: f64) -> Self {
        Self {
            params,
            frame_speed,
            eta,
            x0: -1000.0,
            x1: 200.0,
            cells: 4096,
            sponge_width: 50.0,
            sponge_strength: 1.0,
            settle_time: 5000.0,
            settle_amplitude: 0.1,
            settle_width: 5.0,
            amplitude: 1e-3,
            width: 5.0,
            offset: 5.0,
            sample_interval: 2.0,
            window: (100.0, 800.0),
            fit_samples: 16,
            envelope_period,
            phase: PhaseOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFits {
    pub unmodulated: DecayFit,
    pub modulated: DecayFit,
    pub refined: DecayFit,
    pub front_shift: DecayFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayExperiment {
    pub settled_front: f64,
    pub dt: f64,
    /// Weighted norms of the plain difference of the two runs.
    pub unmodulated: NormSeries,
    /// Weighted norms after undoing the wake phase offset.
    pub modulated: NormSeries,
    pub forward_modulated_linf: Vec<f64>,
    pub psi_linf: Vec<f64>,
    pub psi_x_linf: Vec<f64>,
    pub front_shift: Vec<f64>,
    /// Largest ratio `| |v_fwd| - |v| | / |psi_x|` over the samples.
    pub modulation_constant: f64,
    pub fits: DecayFits,
    pub seconds: f64,
}

/// Settle a comoving front, perturb it near the interface and follow the
/// difference to the unperturbed twin.
pub fn run_decay_experiment(cfg: &DecayExperimentConfig, wt: &WaveTrain) -> Result<DecayExperiment> {
    let clock = Instant::now();
    if !(cfg.envelope_period > 0.0 && cfg.sample_interval > 0.0) {
        return Err(DiagnosticsError::Invalid(
            "envelope period and sample interval must be positive".into(),
        ));
    }
    let grid = Grid::new(cfg.x0, cfg.x1, cfg.cells)?.with_sponge(cfg.sponge_width, cfg.sponge_strength)?;
    let seed = Seed::Localized {
        amplitude: cfg.settle_amplitude,
        width: cfg.settle_width,
        center: 0.0,
    };
    let mut sc = SimConfig::new(cfg.params, grid.clone(), cfg.frame_speed, cfg.settle_time, seed);
    sc.output_interval = cfg.settle_time;
    sc.track_interval = cfg.sample_interval;
    let settled = run_invasion(&sc)?;
    let snap = settled
        .last()
        .cloned()
        .ok_or(DiagnosticsError::NoFront { t: cfg.settle_time })?;
    let xf =
        front_position(&grid, &snap.u, 0.5 * cfg.params.a).ok_or(DiagnosticsError::NoFront { t: cfg.settle_time })?;
    log::info!("settled front at {xf:.3} after t = {}", cfg.settle_time);

    let twin = |amplitude: f64| {
        let mut c = sc.clone();
        c.seed = Seed::FrontSnapshot {
            fields: snap.clone(),
            amplitude,
            width: cfg.width,
            center: xf + cfg.offset,
        };
        Simulation::new(&c)
    };
    let mut base = twin(0.0)?;
    let mut pert = twin(cfg.amplitude)?;
    let tmpl = PhaseTemplate::new(wt);
    let l = tmpl.period();
    let weight = WeightSpec::exp_right(cfg.eta);
    let x_max = measure_limit(&grid);
    let t_end = cfg.window.1 + 0.5 * cfg.envelope_period + cfg.sample_interval;

    let mut out = DecayExperiment {
        settled_front: xf,
        dt: base.stepper.dt,
        unmodulated: NormSeries::default(),
        modulated: NormSeries::default(),
        forward_modulated_linf: Vec::new(),
        psi_linf: Vec::new(),
        psi_x_linf: Vec::new(),
        front_shift: Vec::new(),
        modulation_constant: 0.0,
        fits: DecayFits {
            unmodulated: placeholder_fit(),
            modulated: placeholder_fit(),
            refined: placeholder_fit(),
            front_shift: placeholder_fit(),
        },
        seconds: 0.0,
    };
    let mut k = 1;
    loop {
        let t = k as f64 * cfg.sample_interval;
        if t > t_end {
            break;
        }
        base.advance_to(t)?;
        pert.advance_to(t)?;
        let xb = base.front().ok_or(DiagnosticsError::NoFront { t })?;
        let xp = pert.front().ok_or(DiagnosticsError::NoFront { t })?;
        out.unmodulated.push(
            t,
            difference_norms(&grid, &pert.state, &base.state, &weight, xb, x_max)?,
        );

        // phase offset of the perturbed wake relative to the base wake
        let win = (grid.x0 + 0.5 * l, xb - 0.5 * l);
        let pb = local_phase(&grid, &base.state, &tmpl, win, &cfg.phase)?;
        let pp = local_phase(&grid, &pert.state, &tmpl, win, &cfg.phase)?;
        let dpsi = LocalPhase {
            x: pb.x.clone(),
            psi: pp
                .psi
                .iter()
                .zip(&pb.psi)
                .map(|(a, b)| (a - b) - l * ((a - b) / l).round())
                .collect(),
            correlation: pb.correlation.clone(),
        };
        let x_cut = pb.x.last().copied().unwrap_or(xb);
        let psi = phase_profile(&dpsi, x_cut + 0.5 * l, l);
        let v = modulated_difference(&grid, &pert.state, &base.state, &psi);
        let nv = norms_of(&grid, &v, &weight, xb, x_max)?;
        out.modulated.push(t, nv);
        let vf = forward_modulated_difference(&grid, &pert.state, &base.state, &psi);
        let nf = norms_of(&grid, &vf, &weight, xb, x_max)?;
        out.forward_modulated_linf.push(nf.linf);
        let psi_x = centred(&dpsi.psi, &dpsi.x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out.psi_linf.push(dpsi.psi.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        out.psi_x_linf.push(psi_x);
        if psi_x > 0.0 {
            out.modulation_constant = out.modulation_constant.max((nf.linf - nv.linf).abs() / psi_x);
        }
        out.front_shift.push(xp - xb);
        k += 1;
    }
    let t = &out.unmodulated.t;
    let (w, n, env) = (cfg.window, cfg.fit_samples, Some(cfg.envelope_period));
    let shift: Vec<f64> = out.front_shift.iter().map(|s| s.abs()).collect();
    out.fits = DecayFits {
        unmodulated: fit_sampled(t, &out.unmodulated.linf, w, n, env)?,
        modulated: fit_sampled(t, &out.modulated.linf, w, n, env)?,
        refined: fit_sampled(t, &out.unmodulated.refined, w, n, None)?,
        front_shift: fit_sampled(t, &shift, w, n, None)?,
    };
    out.seconds = clock.elapsed().as_secs_f64();
    Ok(out)
}

fn placeholder_fit() -> DecayFit {
    DecayFit {
        exponent: f64::NAN,
        prefactor: f64::NAN,
        stderr: f64::NAN,
        ci95: (f64::NAN, f64::NAN),
        r_squared: f64::NAN,
        samples: 0,
        window: (f64::NAN, f64::NAN),
    }
}

// ---------------------------------------------------------------------------
// invasion from localized seeds

/// Least-squares fit `x(t) = x0 + c t − b ln t` of a front track.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrontFit {
    pub speed: f64,
    /// Coefficient `b` of the logarithmic delay.
    pub log_coefficient: f64,
    pub offset: f64,
    pub rms: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

pub fn fit_front_position(track: &[(f64, f64)], window: (f64, f64)) -> Result<FrontFit> {
    let pts: Vec<(f64, f64)> = track
        .iter()
        .copied()
        .filter(|(t, x)| *t >= window.0 && *t <= window.1 && *t > 0.0 && x.is_finite())
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData {
            have: pts.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    let row = |t: f64| [1.0, t, -t.ln()];
    let mut ata = Matrix::<f64>::zeros(3, 3);
    let mut atb = [0.0; 3];
    for &(t, x) in &pts {
        let r = row(t);
        for i in 0..3 {
            atb[i] += r[i] * x;
            for j in 0..3 {
                ata.row_mut(i)[j] += r[i] * r[j];
            }
        }
    }
    let sol = solve(&ata, &atb).map_err(|e| DiagnosticsError::Invalid(format!("front fit: {e}")))?;
    let rss: f64 = pts
        .iter()
        .map(|&(t, x)| {
            let r = row(t);
            (x - (sol[0] * r[0] + sol[1] * r[1] + sol[2] * r[2])).powi(2)
        })
        .sum();
    Ok(FrontFit {
        speed: sol[1],
        log_coefficient: sol[2],
        offset: sol[0],
        rms: (rss / pts.len() as f64).sqrt(),
        samples: pts.len(),
        window,
    })
}

/// Two lab-frame invasions from localized seeds of opposite sign near the
/// left wall. The sign flips the monotonicity of the leading edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvasionConfig {
    pub params: ModelParams<f64>,
    pub x0: f64,
    pub x1: f64,
    pub cells: usize,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub fit_window: (f64, f64),
    /// Wake window behind the final front, `(far, near)` distances.
    pub wake_behind: (f64, f64),
    pub output_interval: f64,
}

impl InvasionConfig {
    pub fn new(params: ModelParams<f64>) -> Self {
        Self {
            params,
            x0: -600.0,
            x1: 600.0,
            cells: 4096,
            sponge_width: 50.0,
            sponge_strength: 1.0,
            t_end: 1000.0,
            amplitude: 0.1,
            width: 5.0,
            center: -550.0,
            fit_window: (200.0, 1000.0),
            wake_behind: (700.0, 50.0),
            output_interval: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvasionRecord {
    pub amplitude: f64,
    pub fit: FrontFit,
    pub final_front: f64,
    pub wake: WakeWavenumber,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvasionPair {
    pub positive: InvasionRecord,
    pub negative: InvasionRecord,
    /// `|L₊ − L₋| / mean`.
    pub period_mismatch: f64,
}

fn one_invasion(cfg: &InvasionConfig, amplitude: f64) -> Result<(InvasionRecord, SimulationRun)> {
    let clock = Instant::now();
    let grid = Grid::new(cfg.x0, cfg.x1, cfg.cells)?.with_sponge(cfg.sponge_width, cfg.sponge_strength)?;
    let seed = Seed::Localized {
        amplitude,
        width: cfg.width,
        center: cfg.center,
    };
    let mut sc = SimConfig::new(cfg.params, grid.clone(), 0.0, cfg.t_end, seed);
    sc.output_interval = cfg.output_interval;
    let run = run_invasion(&sc)?;
    let &(t_last, xf) = run
        .front_track
        .last()
        .ok_or(DiagnosticsError::NoFront { t: cfg.t_end })?;
    let fit = fit_front_position(&run.front_track, cfg.fit_window)?;
    let last = run.last().ok_or(DiagnosticsError::NoFront { t: t_last })?;
    let wake = extract_wake_wavenumber(&grid, &last.u, (xf - cfg.wake_behind.0, xf - cfg.wake_behind.1))?;
    Ok((
        InvasionRecord {
            amplitude,
            fit,
            final_front: xf,
            wake,
            seconds: clock.elapsed().as_secs_f64(),
        },
        run,
    ))
}

/// Run both seeds (concurrently) and compare speeds and selected periods.
pub fn run_invasion_pair(cfg: &InvasionConfig) -> Result<(InvasionPair, [SimulationRun; 2])> {
    let (a, b) = rayon::join(
        || one_invasion(cfg, cfg.amplitude),
        || one_invasion(cfg, -cfg.amplitude),
    );
    let ((pos, run_p), (neg, run_n)) = (a?, b?);
    let mean = 0.5 * (pos.wake.l_sel + neg.wake.l_sel);
    Ok((
        InvasionPair {
            period_mismatch: (pos.wake.l_sel - neg.wake.l_sel).abs() / mean,
            positive: pos,
            negative: neg,
        },
        [run_p, run_n],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{solve_spreading_speed, SpreadingOptions};
    use crate::wavetrain::wavetrain_at_speed;
    use std::sync::OnceLock;

    fn train() -> &'static WaveTrain {
        static WT: OnceLock<WaveTrain> = OnceLock::new();
        WT.get_or_init(|| {
            let p = ModelParams::new(0.4, 0.1, 0.005).unwrap();
            let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
            wavetrain_at_speed(&p, ss.c_lin, 256).unwrap()
        })
    }

    fn sample(grid: &Grid, f: impl Fn(f64) -> [f64; 2]) -> Fields {
        let mut out = Fields::zeros(grid.points());
        for j in 0..grid.points() {
            let v = f(grid.x(j));
            out.u[j] = v[0];
            out.w[j] = v[1];
        }
        out
    }

    #[test]
    fn front_fit_recovers_log_delay() {
        let track: Vec<(f64, f64)> = (1..=100)
            .map(|k| {
                let t = 10.0 * k as f64;
                (t, -3.0 + 0.95 * t - 3.2 * t.ln())
            })
            .collect();
        let f = fit_front_position(&track, (200.0, 1000.0)).unwrap();
        assert!((f.speed - 0.95).abs() < 1e-10 && (f.log_coefficient - 3.2).abs() < 1e-8);
        assert!(fit_front_position(&track[..3], (0.0, 1e9)).is_err());
    }

    #[test]
    fn zero_perturbation_has_zero_norms() {
        let g = Grid::new(-50.0, 50.0, 200).unwrap();
        let f = sample(&g, |x| [x.sin(), 0.1 * x.cos()]);
        let n = difference_norms(&g, &f, &f, &WeightSpec::exp_right(0.5), 0.0, g.x1).unwrap();
        assert_eq!(n, WeightedNorms::default());
    }

    #[test]
    fn synthetic_half_power_decay() {
        let g = Grid::new(-40.0, 40.0, 800).unwrap();
        let ws = WeightSpec::exp_right(0.47);
        let zero = Fields::zeros(g.points());
        let mut s = NormSeries::default();
        for k in 0..=400 {
            let t = 2.0 * k as f64;
            let amp = (1.0 + t).powf(-0.5);
            let d = sample(&g, |x| [amp * (-(x * x)).exp(), 0.0]);
            s.push(t, difference_norms(&g, &d, &zero, &ws, 0.0, g.x1).unwrap());
        }
        let fit = fit_decay(&s.t, &s.linf, (100.0, 800.0)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.02, "{}", fit.exponent);
    }

    #[test]
    fn refined_functional_divides_by_one_plus_xi() {
        let g = Grid::new(0.0, 10.0, 10).unwrap();
        let ws = WeightSpec::exp_right(0.3);
        let mut d = Fields::zeros(g.points());
        d.u[5] = 2.0;
        let n = norms_of(&g, &d, &ws, 0.0, g.x1).unwrap();
        let expected = weight_eval(&ws, 5.0) * 2.0 / 6.0;
        assert!((n.refined - expected).abs() < 1e-14 * expected);
        // xi < 1 is excluded
        let mut d0 = Fields::zeros(g.points());
        d0.u[0] = 1.0;
        assert_eq!(norms_of(&g, &d0, &ws, 0.0, g.x1).unwrap().refined, 0.0);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = Grid::new(0.0, 1.0, 10).unwrap();
        let short = Fields::zeros(5);
        let err = norms_of(&g, &short, &WeightSpec::exp_right(0.3), 0.0, 1.0).unwrap_err();
        assert!(matches!(err, DiagnosticsError::GridMismatch { expected: 11, found: 5 }));
    }

    #[test]
    fn exact_power_law_fit() {
        let t: Vec<f64> = (0..50).map(|i| 100.0 + 14.0 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (1.0 + t).powf(-1.5)).collect();
        let fit = fit_decay(&t, &y, (100.0, 800.0)).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        let scaled: Vec<f64> = y.iter().map(|v| 7.5 * v).collect();
        let f2 = fit_decay(&t, &scaled, (100.0, 800.0)).unwrap();
        assert!((f2.exponent - fit.exponent).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let t = [100.0, 200.0, 300.0];
        let err = fit_decay(&t, &[1.0, 0.5, 0.3], (100.0, 800.0)).unwrap_err();
        assert!(matches!(err, DiagnosticsError::InsufficientData { have: 3, .. }));
    }

    #[test]
    fn envelope_removes_modulation() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|t| (1.0 + t).powf(-0.5) * (1.0 + 0.5 * (t * 0.2).sin()))
            .collect();
        let env = period_max_envelope(&t, &y, 2.0 * std::f64::consts::PI / 0.2);
        let fit = fit_sampled(&t, &y, (100.0, 800.0), 16, Some(31.5)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.05, "{}", fit.exponent);
        assert!(env.iter().zip(&y).all(|(e, v)| e >= v));
    }

    fn train_grid(periods: f64) -> (Grid, f64) {
        let l = train().l;
        let n = (periods * l / 0.25).round() as usize;
        (Grid::new(0.0, periods * l, n).unwrap(), l)
    }

    #[test]
    fn rigid_shift_phase() {
        let (g, l) = train_grid(8.0);
        let tmpl = PhaseTemplate::new(train());
        let psi0 = 17.3;
        let f = sample(&g, |x| {
            let v = tmpl.eval(x - psi0);
            [v[0], v[1]]
        });
        let lp = local_phase(&g, &f, &tmpl, (g.x0, g.x1), &PhaseOptions::default()).unwrap();
        for p in &lp.psi {
            let e = (p - psi0) - l * ((p - psi0) / l).round();
            assert!(e.abs() < 1e-3 * l, "{p}");
        }
    }

    #[test]
    fn sinusoidal_modulation_recovered() {
        let (g, l) = train_grid(10.0);
        let tmpl = PhaseTemplate::new(train());
        let psi = |x: f64| 0.1 * (0.01 * x).sin();
        let f = sample(&g, |x| {
            let v = tmpl.eval(x - psi(x));
            [v[0], v[1]]
        });
        let lp = local_phase(&g, &f, &tmpl, (g.x0, g.x1), &PhaseOptions::default()).unwrap();
        let err =
            lp.x.iter()
                .zip(&lp.psi)
                .map(|(x, p)| (p - psi(*x)).abs())
                .fold(0.0, f64::max);
        assert!(err < 5e-3 * l, "{err}");
    }

    #[test]
    fn phase_is_shift_equivariant() {
        let (g, l) = train_grid(8.0);
        let tmpl = PhaseTemplate::new(train());
        let psi = |x: f64| 3.0 + 2.0 * (x / 300.0).sin();
        let field = |delta: f64| {
            sample(&g, |x| {
                let v = tmpl.eval(x - delta - psi(x - delta));
                [v[0], v[1]]
            })
        };
        let delta = 4.2;
        let opts = PhaseOptions::default();
        let a = local_phase(&g, &field(0.0), &tmpl, (g.x0, g.x1), &opts).unwrap();
        let b = local_phase(&g, &field(delta), &tmpl, (g.x0, g.x1), &opts).unwrap();
        // compare at shifted centres, away from the ends
        for (i, x) in b.x.iter().enumerate().skip(8).take(b.x.len() - 16) {
            let expect = a.at(x - delta) + delta;
            let got = b.psi[i];
            let e = (got - expect) - l * ((got - expect) / l).round();
            assert!(e.abs() < 1e-3 * l, "{x}: {got} vs {expect}");
        }
    }

    #[test]
    fn non_periodic_window_is_rejected() {
        let (g, _) = train_grid(3.0);
        let tmpl = PhaseTemplate::new(train());
        let f = sample(&g, |x| [(-(x - 100.0).powi(2) / 50.0).exp() * 0.01, 0.0]);
        let err = local_phase(&g, &f, &tmpl, (g.x0, g.x1), &PhaseOptions::default()).unwrap_err();
        assert!(matches!(err, DiagnosticsError::PhaseUnwrapFailure { .. }));
    }

    #[test]
    fn modulation_undoes_a_phase_offset() {
        let (g, _) = train_grid(6.0);
        let tmpl = PhaseTemplate::new(train());
        let base = sample(&g, |x| {
            let v = tmpl.eval(x);
            [v[0], v[1]]
        });
        let pert = sample(&g, |x| {
            let v = tmpl.eval(x - 0.5);
            [v[0], v[1]]
        });
        let d = modulated_difference(&g, &pert, &base, |_| 0.5);
        // the last points look past the right boundary
        let interior = g.points() - 4;
        let err = d.u[..interior]
            .iter()
            .chain(&d.w[..interior])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-4, "{err}");
        let plain = difference_norms(&g, &pert, &base, &WeightSpec::exp_right(0.4), g.x1, g.x1).unwrap();
        assert!(plain.linf > 1e-2);
    }
}
