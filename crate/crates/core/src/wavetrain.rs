//! Periodic traveling waves `u(x,t) = u_wt(x - ct)` of the kinetics with
//! diffusion in `u` only, computed by Fourier collocation and Newton's method.
//!
//! Profiles live on the scaled coordinate `s = xi / L` in `[0, 1)`. The
//! collocation system is
//! `u'' / L^2 + c u' / L + f(u) - w = 0`, `c w' / L + eps (u - gamma w) = 0`,
//! closed by the phase condition `<u_ref', u - u_ref> = 0` and one free scalar
//! (`c` with `L` fixed, or `L` with `c` fixed).

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Lu, LuError, Matrix};
use crate::model::{ModelError, ModelParams};
use crate::ode::{dopri5, OdeError, OdeOptions};
use crate::spectral::{diff1, diff2, Fourier, TrigInterp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveTrainError {
    #[error("degenerate parameter `{name}` = {value}")]
    DegenerateParameter { name: &'static str, value: f64 },
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("fold detected near {param} = {value} ({reason})")]
    FoldDetected {
        param: &'static str,
        value: f64,
        reason: String,
    },
    #[error("kinetics do not oscillate: {0}")]
    NoOscillation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// A converged (or seed) wave train sampled at `xi_j = j L / N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveTrain {
    #[serde(rename = "L")]
    pub l: f64,
    pub c: f64,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// `d u / d xi`
    pub du: Vec<f64>,
    /// `d w / d xi`
    pub dw: Vec<f64>,
    /// Value of `u` at `xi = 0`, where the profile is anchored at its maximum.
    pub phase_anchor: f64,
    /// Max-norm collocation residual.
    pub residual: f64,
    /// Residual after each Newton iteration of the last solve.
    pub newton_history: Vec<f64>,
    pub params: ModelParams<f64>,
}

/// Which scalar is solved for alongside the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeScalar {
    /// `L` prescribed, `c` unknown.
    Speed,
    /// `c` prescribed, `L` unknown.
    Period,
}

#[derive(Debug, Clone, Copy)]
pub struct WaveTrainOptions {
    pub free: FreeScalar,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WaveTrainOptions {
    fn default() -> Self {
        Self {
            free: FreeScalar::Speed,
            tol: 1e-10,
            max_iter: 40,
        }
    }
}

impl WaveTrain {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn xi(&self, j: usize) -> f64 {
        j as f64 * self.l / self.n() as f64
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Evaluate `(u, w, u', w')` at arbitrary `xi` (periodically extended).
    pub fn interpolant(&self) -> WaveTrainInterp {
        WaveTrainInterp {
            l: self.l,
            u: TrigInterp::new(&self.u),
            w: TrigInterp::new(&self.w),
        }
    }

    /// Spectral resampling onto `m` points (zero padding or truncation).
    pub fn resample(&self, m: usize) -> WaveTrain {
        let u = resample_periodic(&self.u, m);
        let w = resample_periodic(&self.w, m);
        self.with_samples(u, w)
    }

    /// Profile translated by `delta` in `xi`: new `u(xi) = old u(xi + delta)`.
    pub fn shifted(&self, delta: f64) -> WaveTrain {
        let s = delta / self.l;
        let u = shift_periodic(&self.u, s);
        let w = shift_periodic(&self.w, s);
        self.with_samples(u, w)
    }

    fn with_samples(&self, u: Vec<f64>, w: Vec<f64>) -> WaveTrain {
        let f = Fourier::new(u.len());
        let scale = 1.0 / self.l;
        let du = f.derivative(&u, 1).into_iter().map(|v| v * scale).collect();
        let dw = f.derivative(&w, 1).into_iter().map(|v| v * scale).collect();
        WaveTrain {
            l: self.l,
            c: self.c,
            phase_anchor: u[0],
            u,
            w,
            du,
            dw,
            residual: f64::NAN,
            newton_history: Vec::new(),
            params: self.params,
        }
    }

    /// Collocation residual re-evaluated on a grid `factor` times finer.
    pub fn refined_residual(&self, factor: usize) -> f64 {
        let fine = self.resample(self.n() * factor.max(1));
        let (r, _) = residual_fft(&self.params, &fine.u, &fine.w, fine.c, fine.l);
        r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Profile as CSV with columns `xi,u,w,du,dw`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# fhn-lab csv v1\nxi,u,w,du,dw\n");
        for j in 0..self.n() {
            let _ = writeln!(
                out,
                "{:.12e},{:.15e},{:.15e},{:.15e},{:.15e}",
                self.xi(j),
                self.u[j],
                self.w[j],
                self.du[j],
                self.dw[j]
            );
        }
        out
    }

    /// Re-anchor so that `u` has its maximum exactly at `xi = 0`.
    pub fn anchored(&self) -> WaveTrain {
        let interp = TrigInterp::new(&self.u);
        let n = self.n();
        let jmax = (0..n).fold(0, |b, j| if self.u[j] > self.u[b] { j } else { b });
        let mut s = jmax as f64 / n as f64;
        // Newton on u'(s) = 0 using a difference quotient of the interpolant
        let h = 1e-6;
        for _ in 0..30 {
            let (_, d0) = interp.eval(s);
            let (_, dp) = interp.eval(s + h);
            let (_, dm) = interp.eval(s - h);
            let dd = (dp - dm) / (2.0 * h);
            if dd.abs() < 1e-300 {
                break;
            }
            let step = (d0 / dd).clamp(-0.5 / n as f64, 0.5 / n as f64);
            s -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let mut out = self.shifted(s * self.l);
        out.residual = self.residual;
        out.newton_history = self.newton_history.clone();
        out
    }
}

/// Continuous evaluation of a wave-train profile.
#[derive(Debug, Clone)]
pub struct WaveTrainInterp {
    l: f64,
    u: TrigInterp,
    w: TrigInterp,
}

impl WaveTrainInterp {
    pub fn period(&self) -> f64 {
        self.l
    }

    /// `(u, w, u', w')` at `xi`.
    pub fn eval(&self, xi: f64) -> [f64; 4] {
        let s = (xi / self.l).rem_euclid(1.0);
        let (u, du) = self.u.eval(s);
        let (w, dw) = self.w.eval(s);
        [u, w, du / self.l, dw / self.l]
    }
}

fn resample_periodic(f: &[f64], m: usize) -> Vec<f64> {
    let n = f.len();
    let fft = Fourier::new(n);
    let c = fft.coefficients(f);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let kmax = (n / 2).min(m / 2);
    for (j, cj) in c.iter().enumerate() {
        let k = fft.wavenumber(j);
        if k.unsigned_abs() as usize > kmax {
            continue;
        }
        let mut v = *cj;
        // split or merge the Nyquist mode so that the result stays real
        if n.is_multiple_of(2) && k.unsigned_abs() as usize == n / 2 && m > n {
            v *= 0.5;
            out[n / 2] += v;
            out[m - n / 2] += v;
            continue;
        }
        if m.is_multiple_of(2) && k.unsigned_abs() as usize == m / 2 && m < n {
            out[m / 2] += v;
            continue;
        }
        let idx = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
        out[idx] += v;
    }
    Fourier::new(m).synthesize(&out).iter().map(|z| z.re).collect()
}

fn shift_periodic(f: &[f64], s: f64) -> Vec<f64> {
    let n = f.len();
    let fft = Fourier::new(n);
    let mut c = fft.coefficients(f);
    for (j, cj) in c.iter_mut().enumerate() {
        let k = fft.wavenumber(j);
        if n.is_multiple_of(2) && k == n as i64 / 2 {
            *cj *= (2.0 * PI * k as f64 * s).cos();
        } else {
            *cj *= Complex64::from_polar(1.0, 2.0 * PI * k as f64 * s);
        }
    }
    fft.synthesize(&c).iter().map(|z| z.re).collect()
}

/// Residual of the collocation equations (2N entries) plus the scaled
/// derivative samples `(u_s, w_s)` with respect to `s`.
fn residual_fft(p: &ModelParams<f64>, u: &[f64], w: &[f64], c: f64, l: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let f = Fourier::new(n);
    let us = f.derivative(u, 1);
    let uss = f.derivative(u, 2);
    let ws = f.derivative(w, 1);
    let k = 1.0 / l;
    let mut r = vec![0.0; 2 * n];
    for j in 0..n {
        r[j] = k * k * uss[j] + c * k * us[j] + p.cubic(u[j]) - w[j];
        r[n + j] = c * k * ws[j] + p.epsilon * (u[j] - p.gamma * w[j]);
    }
    (r, us)
}

/// Dense collocation operators for one grid size.
struct Collocation {
    n: usize,
    d1: Matrix<f64>,
    d2: Matrix<f64>,
}

/// Unknown bundle for the continuation solver.
#[derive(Debug, Clone)]
struct Point {
    u: Vec<f64>,
    w: Vec<f64>,
    c: f64,
    l: f64,
    eps: f64,
}

/// Scalar that may be varied or solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationParam {
    #[serde(rename = "L")]
    Period,
    #[serde(rename = "c")]
    Speed,
    #[serde(rename = "epsilon")]
    Epsilon,
}

impl ContinuationParam {
    fn name(self) -> &'static str {
        match self {
            Self::Period => "L",
            Self::Speed => "c",
            Self::Epsilon => "epsilon",
        }
    }

    /// The scalar solved for while this one is held fixed.
    fn partner(self) -> ContinuationParam {
        match self {
            Self::Period => Self::Speed,
            Self::Speed => Self::Period,
            Self::Epsilon => Self::Speed,
        }
    }
}

impl Point {
    fn get(&self, v: ContinuationParam) -> f64 {
        match v {
            ContinuationParam::Period => self.l,
            ContinuationParam::Speed => self.c,
            ContinuationParam::Epsilon => self.eps,
        }
    }

    fn set(&mut self, v: ContinuationParam, x: f64) {
        match v {
            ContinuationParam::Period => self.l = x,
            ContinuationParam::Speed => self.c = x,
            ContinuationParam::Epsilon => self.eps = x,
        }
    }
}

impl Collocation {
    fn new(n: usize) -> Self {
        Self {
            n,
            d1: diff1(n),
            d2: diff2(n),
        }
    }

    fn params(base: &ModelParams<f64>, eps: f64) -> ModelParams<f64> {
        let mut p = *base;
        p.epsilon = eps;
        p
    }

    /// Residual: 2N collocation equations followed by the phase condition.
    fn residual(&self, base: &ModelParams<f64>, x: &Point, uref_s: &[f64], uref: &[f64]) -> Vec<f64> {
        let n = self.n;
        let p = Self::params(base, x.eps);
        let us = self.d1.matvec(&x.u);
        let uss = self.d2.matvec(&x.u);
        let ws = self.d1.matvec(&x.w);
        let k = 1.0 / x.l;
        let mut r = vec![0.0; 2 * n + 1];
        for j in 0..n {
            r[j] = k * k * uss[j] + x.c * k * us[j] + p.cubic(x.u[j]) - x.w[j];
            r[n + j] = x.c * k * ws[j] + p.epsilon * (x.u[j] - p.gamma * x.w[j]);
        }
        let mut ph = 0.0;
        for j in 0..n {
            ph += uref_s[j] * (x.u[j] - uref[j]);
        }
        r[2 * n] = ph / n as f64;
        r
    }

    /// Column of partial derivatives with respect to one scalar (2N+1 rows).
    fn scalar_column(&self, base: &ModelParams<f64>, x: &Point, v: ContinuationParam) -> Vec<f64> {
        let n = self.n;
        let k = 1.0 / x.l;
        let mut col = vec![0.0; 2 * n + 1];
        match v {
            ContinuationParam::Speed => {
                let us = self.d1.matvec(&x.u);
                let ws = self.d1.matvec(&x.w);
                for j in 0..n {
                    col[j] = k * us[j];
                    col[n + j] = k * ws[j];
                }
            }
            ContinuationParam::Period => {
                let us = self.d1.matvec(&x.u);
                let uss = self.d2.matvec(&x.u);
                let ws = self.d1.matvec(&x.w);
                for j in 0..n {
                    col[j] = -k * k * (2.0 * k * uss[j] + x.c * us[j]);
                    col[n + j] = -k * k * x.c * ws[j];
                }
            }
            ContinuationParam::Epsilon => {
                for j in 0..n {
                    col[n + j] = x.u[j] - base.gamma * x.w[j];
                }
            }
        }
        col
    }

    /// Jacobian with respect to `(u, w, free)`, size (2N+1)^2.
    fn jacobian(&self, base: &ModelParams<f64>, x: &Point, uref_s: &[f64], free: ContinuationParam) -> Matrix<f64> {
        let n = self.n;
        let m = 2 * n + 1;
        let p = Self::params(base, x.eps);
        let k = 1.0 / x.l;
        let mut j = Matrix::zeros(m, m);
        for r in 0..n {
            for q in 0..n {
                j[(r, q)] = k * k * self.d2[(r, q)] + x.c * k * self.d1[(r, q)];
                j[(n + r, n + q)] = x.c * k * self.d1[(r, q)];
            }
            j[(r, r)] += p.cubic_prime(x.u[r]);
            j[(r, n + r)] = -1.0;
            j[(n + r, r)] = p.epsilon;
            j[(n + r, n + r)] -= p.epsilon * p.gamma;
            j[(2 * n, r)] = uref_s[r] / n as f64;
        }
        let col = self.scalar_column(base, x, free);
        for (r, v) in col.iter().enumerate() {
            j[(r, 2 * n)] = *v;
        }
        j
    }

    /// Newton with the scalar `free` unknown and everything else fixed.
    #[allow(clippy::too_many_arguments)]
    fn newton(
        &self,
        base: &ModelParams<f64>,
        x0: &Point,
        uref: &[f64],
        free: ContinuationParam,
        fixed: ContinuationParam,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Point, Vec<f64>), WaveTrainError> {
        let n = self.n;
        let uref_s = self.d1.matvec(uref);
        let mut x = x0.clone();
        let mut history = Vec::new();
        let mut r = self.residual(base, &x, &uref_s, uref);
        let mut rn = max_abs(&r);
        history.push(rn);
        for it in 0..max_iter {
            let jac = self.jacobian(base, &x, &uref_s, free);
            let lu = match Lu::new(&jac) {
                Ok(lu) => lu,
                Err(LuError::Singular { .. }) | Err(LuError::NotSquare { .. }) => {
                    return Err(WaveTrainError::FoldDetected {
                        param: fixed.name(),
                        value: x.get(fixed),
                        reason: "singular collocation Jacobian".into(),
                    })
                }
            };
            if lu.pivot_ratio() < 1e-14 {
                return Err(WaveTrainError::FoldDetected {
                    param: fixed.name(),
                    value: x.get(fixed),
                    reason: format!("pivot ratio {:e}", lu.pivot_ratio()),
                });
            }
            let dx = lu.solve(&r);
            // damped update: halve until the residual decreases
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let mut y = x.clone();
                for q in 0..n {
                    y.u[q] -= t * dx[q];
                    y.w[q] -= t * dx[n + q];
                }
                let s = y.get(free) - t * dx[2 * n];
                y.set(free, s);
                if free == ContinuationParam::Period && y.l <= 0.0 {
                    t *= 0.5;
                    continue;
                }
                let ry = self.residual(base, &y, &uref_s, uref);
                let ryn = max_abs(&ry);
                if ryn.is_finite() && (ryn < rn || ryn < tol) {
                    accepted = Some((y, ry, ryn));
                    break;
                }
                t *= 0.5;
            }
            let Some((y, ry, ryn)) = accepted else {
                return Err(WaveTrainError::NonConvergence {
                    iterations: it + 1,
                    residual: rn,
                });
            };
            let step = max_abs(&dx) * t;
            x = y;
            r = ry;
            rn = ryn;
            history.push(rn);
            if rn < tol && step < 1e-6 {
                return Ok((x, history));
            }
        }
        Err(WaveTrainError::NonConvergence {
            iterations: max_iter,
            residual: rn,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn require_slow_dynamics(p: &ModelParams<f64>) -> Result<(), WaveTrainError> {
    if p.epsilon <= 0.0 {
        return Err(WaveTrainError::DegenerateParameter {
            name: "epsilon",
            value: p.epsilon,
        });
    }
    Ok(())
}

fn point_of(wt: &WaveTrain) -> Point {
    Point {
        u: wt.u.clone(),
        w: wt.w.clone(),
        c: wt.c,
        l: wt.l,
        eps: wt.params.epsilon,
    }
}

fn train_of(base: &ModelParams<f64>, x: Point, history: Vec<f64>) -> WaveTrain {
    let mut p = *base;
    p.epsilon = x.eps;
    let (r, _) = residual_fft(&p, &x.u, &x.w, x.c, x.l);
    let proto = WaveTrain {
        l: x.l,
        c: x.c,
        u: Vec::new(),
        w: Vec::new(),
        du: Vec::new(),
        dw: Vec::new(),
        phase_anchor: 0.0,
        residual: 0.0,
        newton_history: Vec::new(),
        params: p,
    };
    let mut wt = proto.with_samples(x.u, x.w);
    wt.residual = max_abs(&r);
    wt.newton_history = history;
    wt
}

/// Solve for a wave train starting from `guess` (a seed or a nearby member).
///
/// With [`FreeScalar::Speed`] the period `guess.l` is kept and `c` solved
/// for; with [`FreeScalar::Period`] the speed `guess.c` is kept. The result is
/// re-anchored so that `u` peaks at `xi = 0`.
pub fn find_wavetrain(
    p: &ModelParams<f64>,
    guess: &WaveTrain,
    opts: &WaveTrainOptions,
) -> Result<WaveTrain, WaveTrainError> {
    require_slow_dynamics(p)?;
    let n = guess.n();
    if n < 8 || !n.is_multiple_of(2) {
        return Err(WaveTrainError::Invalid(format!("grid size {n} must be even and >= 8")));
    }
    let col = Collocation::new(n);
    let mut x0 = point_of(guess);
    x0.eps = p.epsilon;
    let (free, fixed) = match opts.free {
        FreeScalar::Speed => (ContinuationParam::Speed, ContinuationParam::Period),
        FreeScalar::Period => (ContinuationParam::Period, ContinuationParam::Speed),
    };
    let (x, hist) = col.newton(p, &x0, &guess.u, free, fixed, opts.tol, opts.max_iter)?;
    let wt = train_of(p, x, hist).anchored();
    if !(wt.residual < 1e-9) {
        return Err(WaveTrainError::NonConvergence {
            iterations: wt.newton_history.len(),
            residual: wt.residual,
        });
    }
    Ok(wt)
}

/// Seed from the space-independent relaxation oscillation `u' = F(u)`.
///
/// The time-periodic orbit `U(t)` of period `T` is embedded as
/// `u_wt(xi) = U(-xi / c)` with `L = c T`, which solves the traveling-wave
/// equation up to the diffusion term `U'' / c^2`.
pub fn relaxation_seed(p: &ModelParams<f64>, c: f64, n: usize) -> Result<WaveTrain, WaveTrainError> {
    require_slow_dynamics(p)?;
    if !(c > 0.0) {
        return Err(WaveTrainError::Invalid(format!("seed speed {c} must be positive")));
    }
    let rhs = |_: f64, y: &[Complex64], d: &mut [Complex64]| {
        let u = y[0].re;
        let w = y[1].re;
        d[0] = Complex64::new(p.cubic(u) - w, 0.0);
        d[1] = Complex64::new(p.epsilon * (u - p.gamma * w), 0.0);
    };
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        ..Default::default()
    };
    let mut y = vec![Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)];
    let slow = 1.0 / p.epsilon;
    dopri5(rhs, 0.0, 15.0 * slow, &mut y, &opts)?;

    // record one long window to locate upward crossings of the midline
    let dt = 0.02_f64.min(0.01 * slow);
    let window = 6.0 * slow;
    let steps = (window / dt).ceil() as usize;
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push((0.0, y[0].re, y.clone()));
    let mut t = 0.0;
    for _ in 0..steps {
        dopri5(rhs, t, t + dt, &mut y, &opts)?;
        t += dt;
        trace.push((t, y[0].re, y.clone()));
    }
    let (umin, umax) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.1), b.max(s.1)));
    if umax - umin < 1e-3 {
        return Err(WaveTrainError::NoOscillation(format!("amplitude {:e}", umax - umin)));
    }
    let mid = 0.5 * (umin + umax);
    let mut crossings = Vec::new();
    for k in 1..trace.len() {
        let (t0, u0, _) = &trace[k - 1];
        let (t1, u1, _) = &trace[k];
        if *u0 < mid && *u1 >= mid {
            crossings.push((k - 1, t0 + (mid - u0) / (u1 - u0) * (t1 - t0)));
        }
    }
    if crossings.len() < 3 {
        return Err(WaveTrainError::NoOscillation(format!(
            "{} midline crossings in the observation window",
            crossings.len()
        )));
    }
    let (k_a, t_a) = crossings[crossings.len() - 2];
    let period = crossings[crossings.len() - 1].1 - t_a;

    // sample one period from the crossing
    let mut y = trace[k_a].2.clone();
    dopri5(rhs, trace[k_a].0, t_a, &mut y, &opts)?;
    let mut us = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let h = period / n as f64;
    for i in 0..n {
        us[i] = y[0].re;
        ws[i] = y[1].re;
        dopri5(rhs, i as f64 * h, (i + 1) as f64 * h, &mut y, &opts)?;
    }
    // u_wt(s_j) = U(t_a - s_j T) = samples[(n - j) mod n]
    let u: Vec<f64> = (0..n).map(|j| us[(n - j) % n]).collect();
    let w: Vec<f64> = (0..n).map(|j| ws[(n - j) % n]).collect();
    let proto = WaveTrain {
        l: c * period,
        c,
        u: Vec::new(),
        w: Vec::new(),
        du: Vec::new(),
        dw: Vec::new(),
        phase_anchor: 0.0,
        residual: f64::NAN,
        newton_history: Vec::new(),
        params: *p,
    };
    Ok(proto.with_samples(u, w).anchored())
}

/// Outcome of a continuation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub param: ContinuationParam,
    pub members: Vec<WaveTrain>,
    /// Set when the branch ended early at a fold.
    pub stopped: Option<String>,
}

impl Branch {
    /// `(L, c)` pairs of the members.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.members.iter().map(|m| (m.l, m.c)).collect()
    }
}

/// Continue `start` in `param` over `range` with `steps` equal increments.
///
/// Each step predicts along the branch tangent (computed from the bordered
/// Jacobian) and corrects at the prescribed parameter value. A fold is
/// reported, and the branch returned with partial results, when the
/// parameter component of the unit tangent collapses or the corrector fails
/// after step refinement.
pub fn continue_in(
    param: ContinuationParam,
    range: (f64, f64),
    steps: usize,
    start: &WaveTrain,
    tol: f64,
) -> Result<Branch, WaveTrainError> {
    let base = start.params;
    require_slow_dynamics(&base)?;
    let mut members = vec![start.clone()];
    if steps == 0 {
        return Ok(Branch {
            param,
            members,
            stopped: None,
        });
    }
    let col = Collocation::new(start.n());
    let free = param.partner();
    let mut x = point_of(start);
    let first = x.get(param);
    if (first - range.0).abs() > 1e-9 * first.abs().max(1.0) {
        return Err(WaveTrainError::Invalid(format!(
            "start has {} = {first}, range begins at {}",
            param.name(),
            range.0
        )));
    }
    for k in 1..=steps {
        let target = range.0 + (range.1 - range.0) * k as f64 / steps as f64;
        let mut cur = x.get(param);
        let mut attempt_ok = false;
        let mut sub = 1usize;
        let mut last_err = None;
        // refine the step into `sub` pieces if the corrector struggles
        while sub <= 64 {
            let mut y = x.clone();
            let mut ok = true;
            for piece in 1..=sub {
                let tp = cur + (target - cur) * piece as f64 / sub as f64;
                let tan = tangent(&col, &base, &y, param, free);
                let Some((du, dw, dq)) = tan else {
                    ok = false;
                    last_err = Some(WaveTrainError::FoldDetected {
                        param: param.name(),
                        value: y.get(param),
                        reason: "singular bordered system".into(),
                    });
                    break;
                };
                let dp = tp - y.get(param);
                let mut guess = y.clone();
                for q in 0..guess.u.len() {
                    guess.u[q] += du[q] * dp;
                    guess.w[q] += dw[q] * dp;
                }
                let s = guess.get(free) + dq * dp;
                guess.set(free, s);
                guess.set(param, tp);
                match col.newton(&base, &guess, &y.u, free, param, tol, 40) {
                    Ok((z, _)) => y = z,
                    Err(e) => {
                        ok = false;
                        last_err = Some(e);
                        break;
                    }
                }
            }
            if ok {
                // fold monitor: the parameter component of the unit tangent
                let slope = (y.get(free) - x.get(free)) / (y.get(param) - x.get(param));
                let norm_dir = 1.0 / (1.0 + slope * slope).sqrt();
                if norm_dir < 1e-4 {
                    return Ok(Branch {
                        param,
                        members,
                        stopped: Some(format!(
                            "fold near {} = {}: branch turns vertical",
                            param.name(),
                            y.get(param)
                        )),
                    });
                }
                x = y;
                attempt_ok = true;
                break;
            }
            sub *= 2;
            cur = x.get(param);
        }
        if !attempt_ok {
            let reason = last_err.map(|e| e.to_string()).unwrap_or_default();
            return Ok(Branch {
                param,
                members,
                stopped: Some(format!("fold near {} = {}: {reason}", param.name(), x.get(param))),
            });
        }
        let wt = train_of(&base, x.clone(), Vec::new());
        members.push(wt);
    }
    Ok(Branch {
        param,
        members,
        stopped: None,
    })
}

/// Branch tangent `d(u, w, free)/d(param)` from the bordered Jacobian.
fn tangent(
    col: &Collocation,
    base: &ModelParams<f64>,
    x: &Point,
    param: ContinuationParam,
    free: ContinuationParam,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = col.n;
    let uref_s = col.d1.matvec(&x.u);
    let jac = col.jacobian(base, x, &uref_s, free);
    let rhs: Vec<f64> = col.scalar_column(base, x, param).iter().map(|v| -v).collect();
    let lu = Lu::new(&jac).ok()?;
    if lu.pivot_ratio() < 1e-14 {
        return None;
    }
    let d = lu.solve(&rhs);
    Some((d[..n].to_vec(), d[n..2 * n].to_vec(), d[2 * n]))
}

/// Follow the family from a long-wave relaxation seed down to speed
/// `c_target` and return the member with `c = c_target` (period solved for).
pub fn wavetrain_at_speed(p: &ModelParams<f64>, c_target: f64, n: usize) -> Result<WaveTrain, WaveTrainError> {
    require_slow_dynamics(p)?;
    let c_seed = 2.5 * c_target;
    let seed = relaxation_seed(p, c_seed, n)?;
    let opts = WaveTrainOptions {
        free: FreeScalar::Speed,
        ..Default::default()
    };
    let first = find_wavetrain(p, &seed, &opts)?;
    let steps = 30;
    let branch = continue_in(ContinuationParam::Speed, (first.c, c_target), steps, &first, 1e-10)?;
    if let Some(why) = &branch.stopped {
        return Err(WaveTrainError::FoldDetected {
            param: "c",
            value: branch.members.last().map(|m| m.c).unwrap_or(f64::NAN),
            reason: why.clone(),
        });
    }
    let last = branch.members.last().expect("nonempty branch");
    find_wavetrain(
        p,
        last,
        &WaveTrainOptions {
            free: FreeScalar::Period,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams<f64> {
        ModelParams::new(0.4, 0.1, 0.005).unwrap()
    }

    fn long_wave() -> WaveTrain {
        let p = params();
        let seed = relaxation_seed(&p, 2.4, 256).unwrap();
        find_wavetrain(&p, &seed, &WaveTrainOptions::default()).unwrap()
    }

    #[test]
    fn rejects_vanishing_epsilon() {
        let p = ModelParams::new(0.4, 0.1, 0.0).unwrap();
        assert!(matches!(
            relaxation_seed(&p, 2.0, 64),
            Err(WaveTrainError::DegenerateParameter { name: "epsilon", .. })
        ));
        let mut wt = long_wave();
        wt.params = p;
        assert!(matches!(
            find_wavetrain(&p, &wt, &WaveTrainOptions::default()),
            Err(WaveTrainError::DegenerateParameter { .. })
        ));
    }

    #[test]
    fn newton_converges_quadratically() {
        let wt = long_wave();
        assert!(wt.residual < 1e-9);
        let h = &wt.newton_history;
        assert!(h.len() >= 3, "{h:?}");
        // the last informative step contracts at least like r^1.5
        let k = h.iter().position(|&r| r < 1e-6).expect("residual below 1e-6");
        assert!(k >= 1);
        assert!(h[k] <= 10.0 * h[k - 1].powf(1.5), "{h:?}");
    }

    #[test]
    fn anchored_at_maximum() {
        let wt = long_wave();
        assert!(wt.du[0].abs() < 1e-8 * wt.l);
        let mean = wt.u.iter().sum::<f64>() / wt.n() as f64;
        assert!(wt.u[0] > mean);
        assert_eq!(wt.phase_anchor, wt.u[0]);
        assert!(wt.u.iter().all(|&v| v <= wt.u[0] + 1e-9));
    }

    #[test]
    fn shift_then_resolve_recovers_orbit() {
        let p = params();
        let wt = long_wave();
        let offset = 7.0 * wt.l / wt.n() as f64;
        let moved = wt.shifted(offset);
        let again = find_wavetrain(&p, &moved, &WaveTrainOptions::default()).unwrap();
        assert!((again.c - wt.c).abs() < 1e-7);
        let d = again
            .u
            .iter()
            .zip(&wt.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-7, "profile mismatch {d:e}");
    }

    #[test]
    fn zero_step_continuation_is_identity() {
        let wt = long_wave();
        let b = continue_in(ContinuationParam::Period, (wt.l, wt.l + 5.0), 0, &wt, 1e-10).unwrap();
        assert_eq!(b.members.len(), 1);
        assert_eq!(b.members[0].c, wt.c);
        assert!(b.stopped.is_none());
    }

    #[test]
    fn reversed_continuation_retraces() {
        let wt = long_wave();
        let l0 = wt.l;
        let fwd = continue_in(ContinuationParam::Period, (l0, l0 - 20.0), 4, &wt, 1e-11).unwrap();
        assert!(fwd.stopped.is_none());
        let end = fwd.members.last().unwrap();
        let back = continue_in(ContinuationParam::Period, (end.l, l0), 4, end, 1e-11).unwrap();
        for (a, b) in fwd.members.iter().zip(back.members.iter().rev()) {
            assert!((a.l - b.l).abs() < 1e-9);
            assert!((a.c - b.c).abs() < 1e-6, "{} vs {}", a.c, b.c);
        }
    }

    #[test]
    fn epsilon_continuation_moves_speed() {
        let wt = long_wave();
        let b = continue_in(ContinuationParam::Epsilon, (0.005, 0.006), 2, &wt, 1e-11).unwrap();
        assert!(b.stopped.is_none());
        assert_eq!(b.members.len(), 3);
        let last = b.members.last().unwrap();
        assert!((last.params.epsilon - 0.006).abs() < 1e-15);
        assert_eq!(last.l, wt.l);
        assert!(last.residual < 1e-9);
    }

    #[test]
    fn refinement_is_spectral() {
        let p = params();
        let wt = long_wave();
        let fine = find_wavetrain(&p, &wt.resample(512), &WaveTrainOptions::default()).unwrap();
        assert!((fine.c - wt.c).abs() < 1e-7);
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((sup(&fine.u) - sup(&wt.u)).abs() < 1e-7);
        assert!(wt.refined_residual(4) < 1e-8);
    }

    #[test]
    fn resample_and_shift_are_exact_on_trig_data() {
        let n = 32;
        let u: Vec<f64> = (0..n).map(|j| (2.0 * PI * 3.0 * j as f64 / n as f64).cos()).collect();
        let up = resample_periodic(&u, 64);
        for (j, v) in up.iter().enumerate() {
            assert!((v - (2.0 * PI * 3.0 * j as f64 / 64.0).cos()).abs() < 1e-13);
        }
        let down = resample_periodic(&up, 32);
        for (a, b) in down.iter().zip(&u) {
            assert!((a - b).abs() < 1e-13);
        }
        let sh = shift_periodic(&u, 0.1);
        for (j, v) in sh.iter().enumerate() {
            let s = j as f64 / n as f64 + 0.1;
            assert!((v - (2.0 * PI * 3.0 * s).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_has_versioned_header() {
        let wt = long_wave();
        let csv = wt.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# fhn-lab csv v1"));
        assert_eq!(lines.next(), Some("xi,u,w,du,dw"));
        assert_eq!(csv.lines().count(), wt.n() + 2);
    }
}
