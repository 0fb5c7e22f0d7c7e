//! Spectral checks for the wave train in the wake and for the front's
//! asymptotic states: Bloch eigencurves, group velocity, spatial Floquet
//! exponents, weighted Fredholm counts and a truncated-domain point-spectrum
//! scan.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{spatial_roots, temporal_roots, SpreadingSpeed};
use crate::linalg::{complexify, eigen, eigenvalues, inverse_iteration, Eigen, EigenError, Lu, Matrix};
use crate::model::{ModelParams, WeightSpec};
use crate::ode::{dopri5, OdeError, OdeOptions};
use crate::simulate::{front_position, Fields, Grid};
use crate::spectral::Fourier;
use crate::wavetrain::WaveTrain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(#[from] EigenError),
    #[error("spectral condition `{which}` violated at kappa = {kappa}: lambda = {re} + {im}i")]
    HypothesisViolated {
        which: SpectralCondition,
        kappa: f64,
        re: f64,
        im: f64,
    },
    #[error("integrator failure: {0}")]
    IntegratorFailure(#[from] OdeError),
    #[error("spatial Floquet exponents could not be labelled: {0}")]
    LabelAmbiguity(String),
    #[error("exponent {re} + {im}i lies within {tol:e} of the weighted axis Re nu = {axis}")]
    CountAmbiguity { re: f64, im: f64, axis: f64, tol: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// The individual spectral conditions on the wave train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCondition {
    /// Spectrum in the open left half-plane apart from the origin.
    NoUnstableSpectrum,
    /// `max Re lambda(i kappa) <= -theta kappa^2` with `theta > 0`.
    QuadraticTangency,
    /// Zero is an algebraically simple Bloch eigenvalue at `kappa = 0`.
    SimpleZero,
    /// Group velocity negative in the comoving frame.
    OutgoingGroupVelocity,
}

impl std::fmt::Display for SpectralCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::NoUnstableSpectrum => "no_unstable_spectrum",
            Self::QuadraticTangency => "quadratic_tangency",
            Self::SimpleZero => "simple_zero",
            Self::OutgoingGroupVelocity => "outgoing_group_velocity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub no_unstable_spectrum: bool,
    pub quadratic_tangency: bool,
    pub simple_zero: bool,
    pub outgoing_group_velocity: bool,
    pub theta: f64,
    pub c_g: f64,
    #[serde(rename = "D_eff_wt")]
    pub d_eff_wt: f64,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.no_unstable_spectrum && self.quadratic_tangency && self.simple_zero && self.outgoing_group_velocity
    }
}

#[derive(Debug, Clone)]
pub struct BlochOptions {
    /// Fourier modes per component (matrix size is twice this).
    pub n_modes: usize,
    /// Floquet wavenumbers; `None` means `n_kappa` uniform points in `[-pi/L, pi/L)`.
    pub kappa_grid: Option<Vec<f64>>,
    pub n_kappa: usize,
    /// Number of rightmost eigenvalues kept per wavenumber.
    pub keep: usize,
    /// Lower cutoff `|kappa| >= kappa_min_fraction * pi / L` for the tangency fit.
    pub kappa_min_fraction: f64,
    /// Finite-difference step for the critical curve, as a fraction of `pi / L`.
    pub fd_fraction: f64,
    /// Eigenvalues with `|lambda|` below this count as the zero eigenvalue.
    pub zero_tol: f64,
    /// Mirror `kappa < 0` from `kappa > 0` by complex conjugation.
    pub use_conjugation: bool,
    /// Return `HypothesisViolated` instead of a report with failing flags.
    pub strict: bool,
}

impl Default for BlochOptions {
    fn default() -> Self {
        Self {
            n_modes: 256,
            kappa_grid: None,
            n_kappa: 64,
            keep: 12,
            kappa_min_fraction: 0.05,
            fd_fraction: 0.02,
            zero_tol: 1e-6,
            use_conjugation: true,
            strict: false,
        }
    }
}

/// Bloch eigencurves of the wave-train linearisation with derived
/// group velocity, effective diffusivity and tangency constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlochSpectrum {
    #[serde(rename = "L")]
    pub period: f64,
    pub speed: f64,
    pub n_modes: usize,
    pub kappa_grid: Vec<f64>,
    /// Rightmost eigenvalues per wavenumber, sorted by decreasing real part.
    pub eigencurves: Vec<Vec<Complex64>>,
    /// Group velocity from the adjoint formula, `-(2 <u_ad, D u''> + c)`.
    pub c_g: f64,
    /// `2 <u_ad, D u''> + c`, the derivative of the critical curve in `nu` at 0.
    pub adjoint_slope: f64,
    /// Group velocity from a Richardson difference of the tracked curve.
    pub c_g_fd: f64,
    /// Group velocity from a least-squares fit of the tracked curve.
    pub c_g_fit: f64,
    #[serde(rename = "D_eff_wt")]
    pub d_eff_wt: f64,
    #[serde(rename = "D_eff_wt_fit")]
    pub d_eff_fit: f64,
    pub theta_fit: f64,
    pub translation_eigenvalue: Complex64,
    /// `|<v, u_wt'>| / (|v| |u_wt'|)` for the computed zero eigenvector.
    pub translation_correlation: f64,
    /// Second-smallest `|lambda|` at `kappa = 0`.
    pub spectral_gap: f64,
    /// `<u_ad, u_wt'>` before normalisation; nonzero means no Jordan block.
    pub adjoint_overlap: f64,
    /// Worst `|A v - lambda v| / |A|` over sampled eigenpairs.
    pub max_pair_residual: f64,
    /// Adjoint eigenfunction samples `(u, w)` on `xi_j = j L / N`.
    pub u_ad: Vec<[Complex64; 2]>,
    pub report: ConditionReport,
}

/// Fourier–Galerkin representation of the Bloch operators
/// `D (d + i kappa)^2 + c (d + i kappa) + F'(u_wt)`.
///
/// Modes `|m| <= n/2 - 1` are kept. Leaving out the unpaired Nyquist mode
/// makes the truncation symmetric under `m -> -m`, so the spectrum at
/// `-kappa` is exactly the conjugate of the one at `kappa`.
pub struct BlochOperator {
    /// Sampling grid size.
    n: usize,
    /// Retained modes per component, `n - 1`.
    modes: usize,
    l: f64,
    c: f64,
    eps: f64,
    gamma: f64,
    /// Coefficients `g_j` of `f'(u_wt)` for `|j| <= n - 2`, offset by `n - 2`.
    g: Vec<Complex64>,
    /// Coefficients of `u_wt` and `w_wt` in mode order `m = -(n/2 - 1) ..= n/2 - 1`.
    u_hat: Vec<Complex64>,
    w_hat: Vec<Complex64>,
}

impl BlochOperator {
    pub fn new(wt: &WaveTrain, p: &ModelParams<f64>, c: f64, n_modes: usize) -> Result<Self, SpectraError> {
        if n_modes < 8 || !n_modes.is_multiple_of(2) {
            return Err(SpectraError::Invalid(format!(
                "n_modes = {n_modes} must be even and >= 8"
            )));
        }
        let n = n_modes;
        let half = (n / 2 - 1) as i64;
        let span = 2 * half;
        let base = wt.resample(n);
        // f'(u) is quadratic in u: sampling on 2n points resolves all |j| < n exactly
        let fine = wt.resample(2 * n);
        let gvals: Vec<f64> = fine.u.iter().map(|&u| p.cubic_prime(u)).collect();
        let gc = Fourier::new(2 * n).coefficients(&gvals);
        let g = (-span..=span)
            .map(|j| {
                gc[if j >= 0 {
                    j as usize
                } else {
                    (2 * n as i64 + j) as usize
                }]
            })
            .collect();
        let f = Fourier::new(n);
        let to_modes = |c: Vec<Complex64>| -> Vec<Complex64> {
            (-half..=half)
                .map(|m| c[if m >= 0 { m as usize } else { (n as i64 + m) as usize }])
                .collect()
        };
        Ok(Self {
            n,
            modes: n - 1,
            l: wt.l,
            c,
            eps: p.epsilon,
            gamma: p.gamma,
            g,
            u_hat: to_modes(f.coefficients(&base.u)),
            w_hat: to_modes(f.coefficients(&base.w)),
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    fn k(&self, i: usize) -> f64 {
        2.0 * PI * (i as f64 - (self.n / 2 - 1) as f64) / self.l
    }

    /// Dense matrix of the Bloch operator at `nu` (use `nu = i kappa` for the spectrum).
    pub fn matrix(&self, nu: Complex64) -> Matrix<Complex64> {
        let m = self.modes;
        let off = (m - 1) as i64;
        let mut a = Matrix::zeros(2 * m, 2 * m);
        let i1 = Complex64::new(0.0, 1.0);
        for r in 0..m {
            let q = i1 * self.k(r) + nu;
            for s in 0..m {
                a[(r, s)] = self.g[(r as i64 - s as i64 + off) as usize];
            }
            a[(r, r)] += q * q + q * self.c;
            a[(r, m + r)] = Complex64::new(-1.0, 0.0);
            a[(m + r, r)] = Complex64::new(self.eps, 0.0);
            a[(m + r, m + r)] = q * self.c - self.eps * self.gamma;
        }
        a
    }

    /// `L^2(0, L)` inner product of two coefficient vectors.
    fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            s += x.conj() * y;
        }
        s * self.l
    }

    /// Coefficients of `(u_wt^(order), w_wt^(order))`.
    fn derivative_mode(&self, order: i32) -> Vec<Complex64> {
        let m = self.modes;
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * m];
        for i in 0..m {
            let ik = Complex64::new(0.0, self.k(i)).powi(order);
            v[i] = ik * self.u_hat[i];
            v[m + i] = ik * self.w_hat[i];
        }
        v
    }

    /// Samples on `xi_j = j L / n` of a coefficient vector.
    fn samples(&self, v: &[Complex64]) -> Vec<[Complex64; 2]> {
        let n = self.n;
        let half = (n / 2 - 1) as i64;
        let f = Fourier::new(n);
        let mut cu = vec![Complex64::new(0.0, 0.0); n];
        let mut cw = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..self.modes {
            let m = i as i64 - half;
            let idx = if m >= 0 { m as usize } else { (n as i64 + m) as usize };
            cu[idx] = v[i];
            cw[idx] = v[self.modes + i];
        }
        let su = f.synthesize(&cu);
        let sw = f.synthesize(&cw);
        su.into_iter().zip(sw).map(|(a, b)| [a, b]).collect()
    }
}

fn uniform_kappa(l: f64, n: usize) -> Vec<f64> {
    let kw = PI / l;
    (0..n).map(|j| -kw + 2.0 * kw * j as f64 / n as f64).collect()
}

/// Critical eigenvalue nearest `shift` by shift-invert iteration.
fn critical_eigenvalue(op: &BlochOperator, nu: Complex64, shift: Complex64) -> Result<Complex64, SpectraError> {
    let a = op.matrix(nu);
    let (lam, _) = inverse_iteration(&a, shift, None, 1e-14, 60)?;
    Ok(lam)
}

/// Compute Bloch eigencurves and the derived wave-train quantities.
pub fn bloch_spectrum(
    wt: &WaveTrain,
    p: &ModelParams<f64>,
    c: f64,
    opts: &BlochOptions,
) -> Result<BlochSpectrum, SpectraError> {
    let op = BlochOperator::new(wt, p, c, opts.n_modes)?;
    let l = wt.l;
    let kw = PI / l;
    let grid = opts
        .kappa_grid
        .clone()
        .unwrap_or_else(|| uniform_kappa(l, opts.n_kappa));
    if grid.iter().any(|k| !k.is_finite() || k.abs() > kw * (1.0 + 1e-12)) {
        return Err(SpectraError::Invalid("kappa outside [-pi/L, pi/L]".into()));
    }

    // which grid points need a direct solve
    let tol_k = 1e-12 * kw;
    let mut direct: Vec<usize> = Vec::new();
    let mut mirror: Vec<(usize, usize)> = Vec::new();
    for (i, &k) in grid.iter().enumerate() {
        if opts.use_conjugation && k < -tol_k && (k + kw).abs() > tol_k {
            if let Some(j) = grid.iter().position(|&q| (q + k).abs() <= tol_k) {
                mirror.push((i, j));
                continue;
            }
        }
        direct.push(i);
    }
    let solved: Vec<(usize, Result<Vec<Complex64>, EigenError>)> = direct
        .par_iter()
        .map(|&i| (i, eigenvalues(&op.matrix(Complex64::new(0.0, grid[i])))))
        .collect();
    let mut spectra: Vec<Vec<Complex64>> = vec![Vec::new(); grid.len()];
    for (i, r) in solved {
        spectra[i] = r?;
    }
    for (i, j) in mirror {
        spectra[i] = spectra[j].iter().map(|z| z.conj()).collect();
    }

    // kappa = 0 analysis
    let a0 = op.matrix(Complex64::new(0.0, 0.0));
    let spec0 = match grid.iter().position(|k| k.abs() <= tol_k) {
        Some(i) => spectra[i].clone(),
        None => eigenvalues(&a0)?,
    };
    let mut by_mod: Vec<Complex64> = spec0.clone();
    by_mod.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let translation_qr = by_mod[0];
    let spectral_gap = by_mod.get(1).map(|z| z.norm()).unwrap_or(f64::INFINITY);

    let (lam0, v0) = inverse_iteration(&a0, Complex64::new(0.0, 0.0), None, 1e-14, 60)?;
    let dmode = op.derivative_mode(1);
    let dnorm = op.inner(&dmode, &dmode).re.sqrt();
    let vnorm = op.inner(&v0, &v0).re.sqrt();
    let translation_correlation = op.inner(&v0, &dmode).norm() / (dnorm * vnorm);

    // adjoint null vector and group velocity
    let (_, mut ad) = inverse_iteration(&a0.adjoint(), Complex64::new(0.0, 0.0), None, 1e-14, 60)?;
    let s = op.inner(&ad, &dmode);
    let adjoint_overlap = s.norm() / (op.inner(&ad, &ad).re.sqrt() * dnorm);
    let alpha = Complex64::new(1.0, 0.0) / s.conj();
    for z in ad.iter_mut() {
        *z *= alpha;
    }
    let mut d2u = op.derivative_mode(2);
    // only the u component carries diffusion
    d2u[op.modes..].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    let slope_c = op.inner(&ad, &d2u) * 2.0 + c;
    let adjoint_slope = slope_c.re;
    let c_g = -adjoint_slope;

    // tracked critical curve at small kappa
    let h = opts.fd_fraction * kw;
    let mut samples = Vec::new();
    for m in [-4i32, -3, -2, -1, 1, 2, 3, 4] {
        let kappa = m as f64 * h;
        let guess = Complex64::new(0.0, -c_g * kappa);
        let lam = critical_eigenvalue(&op, Complex64::new(0.0, kappa), guess)?;
        samples.push((kappa, lam - lam0));
    }
    let at = |m: i32| {
        samples
            .iter()
            .find(|(k, _)| (k - m as f64 * h).abs() < 1e-3 * h)
            .unwrap()
            .1
    };
    let d1 = (at(1) - at(-1)) * 0.5;
    let d2 = (at(2) - at(-2)) * 0.5;
    // odd part: -i c_g kappa + O(kappa^3); Richardson removes the cubic term
    let slope = (d1 * 8.0 - d2) / (6.0 * h);
    let c_g_fd = -slope.im;
    let s1 = (at(1) + at(-1)).re * 0.5;
    let s2 = (at(2) + at(-2)).re * 0.5;
    let d_eff_wt = -(16.0 * s1 - s2) / (12.0 * h * h);
    let (c_g_fit, d_eff_fit) = fit_critical_curve(&samples);

    // tangency constant and stability
    let kmin = opts.kappa_min_fraction * kw;
    let mut theta = f64::INFINITY;
    let mut unstable: Option<(f64, Complex64)> = None;
    let mut tangency_violation: Option<(f64, Complex64)> = None;
    let mut eigencurves = Vec::with_capacity(grid.len());
    for (i, &k) in grid.iter().enumerate() {
        let mut sp = spectra[i].clone();
        sp.sort_by(|x, y| y.re.total_cmp(&x.re));
        let is_zero_k = k.abs() <= tol_k;
        // at kappa = 0 the translation eigenvalue is excluded
        let rightmost = if is_zero_k {
            let mut rest = sp.clone();
            if let Some(pos) = rest.iter().position(|z| (*z - translation_qr).norm() == 0.0) {
                rest.remove(pos);
            }
            rest.first().copied()
        } else {
            sp.first().copied()
        };
        if let Some(z) = rightmost {
            if z.re >= 0.0 && unstable.is_none() {
                unstable = Some((k, z));
            }
            if k.abs() >= kmin {
                let th = -z.re / (k * k);
                if th < theta {
                    theta = th;
                }
                if th <= 0.0 && tangency_violation.is_none() {
                    tangency_violation = Some((k, z));
                }
            }
        }
        sp.truncate(opts.keep);
        eigencurves.push(sp);
    }
    if !theta.is_finite() {
        theta = f64::NAN;
    }

    // sampled residual check of the QR eigenvalues at kappa = 0
    let mut max_pair_residual: f64 = 0.0;
    let stride = (spec0.len() / 10).max(1);
    for z in spec0.iter().step_by(stride).take(10) {
        max_pair_residual = max_pair_residual.max(qr_pair_residual(&a0, *z));
    }

    let zero_ok = translation_qr.norm() < opts.zero_tol;
    let simple_zero = zero_ok && spectral_gap > 10.0 * opts.zero_tol && adjoint_overlap > 1e-8;
    let report = ConditionReport {
        no_unstable_spectrum: unstable.is_none() && zero_ok,
        quadratic_tangency: theta > 0.0,
        simple_zero,
        outgoing_group_velocity: c_g < 0.0,
        theta,
        c_g,
        d_eff_wt,
    };
    if opts.strict {
        if let Some((k, z)) = unstable {
            return Err(violation(SpectralCondition::NoUnstableSpectrum, k, z));
        }
        if let Some((k, z)) = tangency_violation {
            return Err(violation(SpectralCondition::QuadraticTangency, k, z));
        }
        if !simple_zero {
            return Err(violation(
                SpectralCondition::SimpleZero,
                0.0,
                by_mod.get(1).copied().unwrap_or_default(),
            ));
        }
        if c_g >= 0.0 {
            return Err(violation(
                SpectralCondition::OutgoingGroupVelocity,
                0.0,
                Complex64::new(c_g, 0.0),
            ));
        }
    }
    Ok(BlochSpectrum {
        period: l,
        speed: c,
        n_modes: opts.n_modes,
        kappa_grid: grid,
        eigencurves,
        c_g,
        adjoint_slope,
        c_g_fd,
        c_g_fit,
        d_eff_wt,
        d_eff_fit,
        theta_fit: theta,
        translation_eigenvalue: translation_qr,
        translation_correlation,
        spectral_gap,
        adjoint_overlap,
        max_pair_residual,
        u_ad: op.samples(&ad),
        report,
    })
}

fn violation(which: SpectralCondition, kappa: f64, z: Complex64) -> SpectraError {
    SpectraError::HypothesisViolated {
        which,
        kappa,
        re: z.re,
        im: z.im,
    }
}

/// Residual of `(lambda, v)` where `v` is one inverse-iteration step at the
/// (fixed) QR eigenvalue; small only if `lambda` is an accurate eigenvalue.
fn qr_pair_residual(a: &Matrix<Complex64>, lambda: Complex64) -> f64 {
    let n = a.rows();
    let scale = a.norm_fro();
    let mut m = a.clone();
    let bump = Complex64::new(1e-14 * scale, 0.0);
    for i in 0..n {
        m[(i, i)] -= lambda + bump;
    }
    let Ok(lu) = Lu::new(&m) else {
        return 0.0;
    };
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, 0.37 * i as f64)).collect();
    for _ in 0..2 {
        v = lu.solve(&v);
        let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= s);
    }
    crate::linalg::pair_residual(a, lambda, &v)
}

/// Least squares `Im = -c_g k + a k^3`, `Re = -D k^2 + b k^4`.
fn fit_critical_curve(samples: &[(f64, Complex64)]) -> (f64, f64) {
    let solve2 = |rows: &[(f64, f64, f64)]| {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x1, x2, y) in rows {
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * y;
            b2 += x2 * y;
        }
        let det = a11 * a22 - a12 * a12;
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    };
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.0.abs()));
    let im_rows: Vec<_> = samples
        .iter()
        .map(|(k, z)| (k / scale, (k / scale).powi(3), z.im))
        .collect();
    let re_rows: Vec<_> = samples
        .iter()
        .map(|(k, z)| ((k / scale).powi(2), (k / scale).powi(4), z.re))
        .collect();
    let (ci, _) = solve2(&im_rows);
    let (cr, _) = solve2(&re_rows);
    (-ci / scale, -cr / (scale * scale))
}

// ---------------------------------------------------------------------------
// spatial Floquet exponents

#[derive(Debug, Clone, Copy)]
pub struct FloquetOptions {
    /// Shooting segments per period; `None` picks about one per 4 length units.
    pub segments: Option<usize>,
    pub rtol: f64,
    pub atol: f64,
    /// Admissible `|lambda|`.
    pub delta: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            segments: None,
            rtol: 1e-12,
            atol: 1e-14,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetExponents {
    pub lambda: Complex64,
    /// All three exponents, sorted by decreasing real part, `|Im| <= pi/L`.
    pub exponents: [Complex64; 3],
    /// The exponent of smallest modulus.
    pub nu_wt: Complex64,
    pub unstable: usize,
    pub stable: usize,
    /// `|Re (sum nu) - (-c + (lambda + eps gamma)/c)|`, a Liouville check.
    pub trace_defect: f64,
    pub segments: usize,
}

/// Expansion coefficients of the critical exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetExpansion {
    pub nu1: f64,
    pub nu2: f64,
    pub step: f64,
    pub samples: Vec<FloquetExponents>,
}

/// Transfer matrices of `y' = A(xi) y`, `y = (u, u', w)`, over the shooting segments.
fn transfer_matrices(
    wt: &WaveTrain,
    p: &ModelParams<f64>,
    c: f64,
    lambda: Complex64,
    segments: usize,
    opts: &FloquetOptions,
) -> Result<Vec<[[Complex64; 3]; 3]>, SpectraError> {
    let interp = wt.interpolant();
    let eg = p.epsilon * p.gamma;
    let rhs = |xi: f64, y: &[Complex64], d: &mut [Complex64]| {
        let fp = p.cubic_prime(interp.eval(xi)[0]);
        for col in 0..3 {
            let u = y[col];
            let up = y[3 + col];
            let w = y[6 + col];
            d[col] = up;
            d[3 + col] = (lambda - fp) * u - up * c + w;
            d[6 + col] = ((lambda + eg) * w - u * p.epsilon) / c;
        }
    };
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h0: 1e-2,
        ..Default::default()
    };
    let h = wt.l / segments as f64;
    let mut out = Vec::with_capacity(segments);
    for s in 0..segments {
        let mut y = vec![Complex64::new(0.0, 0.0); 9];
        y[0] = Complex64::new(1.0, 0.0);
        y[4] = Complex64::new(1.0, 0.0);
        y[8] = Complex64::new(1.0, 0.0);
        dopri5(rhs, s as f64 * h, (s + 1) as f64 * h, &mut y, &ode)?;
        let mut t = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (row, trow) in t.iter_mut().enumerate() {
            for (col, v) in trow.iter_mut().enumerate() {
                *v = y[3 * row + col];
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Block-cyclic lift: `zeta x_k = T_k x_{k-1}` with eigenvalues `zeta`,
/// `zeta^S` ranging over the monodromy multipliers.
fn cyclic_lift(ts: &[[[Complex64; 3]; 3]]) -> Matrix<Complex64> {
    let s = ts.len();
    let mut m = Matrix::zeros(3 * s, 3 * s);
    for (k, t) in ts.iter().enumerate() {
        let prev = (k + s - 1) % s;
        for r in 0..3 {
            for q in 0..3 {
                m[(3 * k + r, 3 * prev + q)] = t[r][q];
            }
        }
    }
    m
}

fn wrap_im(nu: Complex64, l: f64) -> Complex64 {
    let period = 2.0 * PI / l;
    let mut im = nu.im.rem_euclid(period);
    if im > 0.5 * period {
        im -= period;
    }
    Complex64::new(nu.re, im)
}

fn floquet_distance(a: Complex64, b: Complex64, l: f64) -> f64 {
    let d = wrap_im(a - b, l);
    d.norm()
}

/// Spatial Floquet exponents of `(L_wt - lambda) u = 0` by multiple shooting.
pub fn floquet_exponents(
    wt: &WaveTrain,
    p: &ModelParams<f64>,
    c: f64,
    lambda: Complex64,
    opts: &FloquetOptions,
) -> Result<FloquetExponents, SpectraError> {
    if lambda.norm() > opts.delta {
        return Err(SpectraError::Invalid(format!(
            "|lambda| = {} exceeds delta = {}",
            lambda.norm(),
            opts.delta
        )));
    }
    if !(c > 0.0) {
        return Err(SpectraError::Invalid("frame speed must be positive".into()));
    }
    let l = wt.l;
    let segs = opts.segments.unwrap_or(((l / 4.0).ceil() as usize).max(8));
    let ts = transfer_matrices(wt, p, c, lambda, segs, opts)?;
    let lift = cyclic_lift(&ts);
    let zetas = eigenvalues(&lift)?;
    // every multiplier appears segs times (zeta times roots of unity)
    let sf = segs as f64;
    let nus: Vec<Complex64> = zetas.iter().map(|z| wrap_im(z.ln() * sf / l, l)).collect();
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for nu in &nus {
        let tol = 1e-6 * (1.0 + nu.norm());
        match clusters.iter_mut().find(|(c0, _)| floquet_distance(*c0, *nu, l) < tol) {
            Some(cl) => cl.1 += 1,
            None => clusters.push((*nu, 1)),
        }
    }
    if clusters.len() != 3 || clusters.iter().any(|(_, m)| *m != segs) {
        return Err(SpectraError::LabelAmbiguity(format!(
            "expected 3 clusters of {segs} lifted eigenvalues, found {:?}",
            clusters.iter().map(|c| c.1).collect::<Vec<_>>()
        )));
    }
    // refine the critical exponent by inverse iteration on the lift
    let mut ex: Vec<Complex64> = clusters.iter().map(|c| c.0).collect();
    ex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    if ex[1].norm() < 2.0 * ex[0].norm() {
        return Err(SpectraError::LabelAmbiguity(format!(
            "two exponents of similar modulus: {} and {}",
            ex[0], ex[1]
        )));
    }
    let zeta0 = (ex[0] * l / sf).exp();
    if let Ok((z, _)) = inverse_iteration(&lift, zeta0, None, 1e-15, 40) {
        let refined = wrap_im(z.ln() * sf / l, l);
        if floquet_distance(refined, ex[0], l) < 1e-6 {
            ex[0] = refined;
        }
    }
    let nu_wt = ex[0];
    let mut sorted = [ex[0], ex[1], ex[2]];
    sorted.sort_by(|a, b| b.re.total_cmp(&a.re));
    let expected = -c + (lambda.re + p.epsilon * p.gamma) / c;
    let trace_defect = (sorted.iter().map(|z| z.re).sum::<f64>() - expected).abs();
    let unstable = sorted.iter().filter(|z| z.re > 0.0).count();
    Ok(FloquetExponents {
        lambda,
        exponents: sorted,
        nu_wt,
        unstable,
        stable: 3 - unstable,
        trace_defect,
        segments: segs,
    })
}

/// Fit `nu_wt(lambda) = nu1 lambda - nu2 lambda^2 + O(lambda^3)` from real
/// `lambda` in `{+-h, +-2h}`, removing the cubic and quartic terms exactly.
pub fn floquet_expansion(
    wt: &WaveTrain,
    p: &ModelParams<f64>,
    c: f64,
    h: f64,
    opts: &FloquetOptions,
) -> Result<FloquetExpansion, SpectraError> {
    let lams = [-2.0 * h, -h, h, 2.0 * h];
    let samples: Vec<FloquetExponents> = lams
        .par_iter()
        .map(|&lam| floquet_exponents(wt, p, c, Complex64::new(lam, 0.0), opts))
        .collect::<Result<_, _>>()?;
    let v = |i: usize| samples[i].nu_wt.re;
    let o1 = 0.5 * (v(2) - v(1));
    let o2 = 0.5 * (v(3) - v(0));
    let e1 = 0.5 * (v(2) + v(1));
    let e2 = 0.5 * (v(3) + v(0));
    // o(h) = nu1 h + a h^3, e(h) = -nu2 h^2 + b h^4
    let nu1 = (8.0 * o1 - o2) / (6.0 * h);
    let nu2 = -(16.0 * e1 - e2) / (12.0 * h * h);
    Ok(FloquetExpansion {
        nu1,
        nu2,
        step: h,
        samples,
    })
}

// ---------------------------------------------------------------------------
// essential spectrum and Fredholm counts

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FredholmReport {
    /// `(eta_minus, eta_plus)`.
    pub weight: (f64, f64),
    pub floquet_exponents: [Complex64; 3],
    /// Spatial eigenvalues of the weighted leading-edge operator at `lambda = 0`.
    pub spatial_eigenvalues: [Complex64; 3],
    /// Floquet exponents with `Re nu > eta_minus`.
    pub count_wake: usize,
    /// Spatial eigenvalues with `Re nu > -eta_plus`.
    pub count_leading_edge: usize,
    pub index: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssentialBorders {
    pub report: FredholmReport,
    /// `(k, lambda_+(ik))`, both temporal roots per `k`.
    pub leading_edge: Vec<(f64, [Complex64; 2])>,
    /// `(kappa, lambda_wt(i kappa))` near the origin.
    pub wake: Vec<(f64, Complex64)>,
}

/// Border curves of the essential spectrum and the weighted Fredholm index
/// at `lambda = 0`.
pub fn essential_spectrum_borders(
    p: &ModelParams<f64>,
    ss: &SpreadingSpeed<f64>,
    wt: &WaveTrain,
    weight: (f64, f64),
    k_grid: &[f64],
    n_wake: usize,
    opts: &FloquetOptions,
) -> Result<EssentialBorders, SpectraError> {
    let c = ss.c_lin;
    let tol = 1e-6;
    let fl = floquet_exponents(wt, p, c, Complex64::new(0.0, 0.0), opts)?;
    let roots = spatial_roots(p, c, Complex64::new(0.0, 0.0));
    let shifted = roots.map(|z| z + ss.eta_lin);
    for z in fl.exponents {
        if (z.re - weight.0).abs() < tol {
            return Err(SpectraError::CountAmbiguity {
                re: z.re,
                im: z.im,
                axis: weight.0,
                tol,
            });
        }
    }
    for z in shifted {
        if (z.re + weight.1).abs() < tol {
            return Err(SpectraError::CountAmbiguity {
                re: z.re,
                im: z.im,
                axis: -weight.1,
                tol,
            });
        }
    }
    let count_wake = fl.exponents.iter().filter(|z| z.re > weight.0).count();
    let count_leading_edge = shifted.iter().filter(|z| z.re > -weight.1).count();
    let report = FredholmReport {
        weight,
        floquet_exponents: fl.exponents,
        spatial_eigenvalues: shifted,
        count_wake,
        count_leading_edge,
        index: count_wake as i64 - count_leading_edge as i64,
    };
    let leading_edge = k_grid
        .iter()
        .map(|&k| (k, temporal_roots(p, c, Complex64::new(-ss.eta_lin, k))))
        .collect();
    let mut wake = Vec::new();
    if n_wake > 0 {
        let op = BlochOperator::new(wt, p, c, wt.n())?;
        let kw = PI / wt.l;
        let mut guess = Complex64::new(0.0, 0.0);
        for j in 0..=n_wake {
            let kappa = 0.5 * kw * j as f64 / n_wake as f64;
            let lam = critical_eigenvalue(&op, Complex64::new(0.0, kappa), guess)?;
            guess = lam;
            wake.push((kappa, lam));
        }
    }
    Ok(EssentialBorders {
        report,
        leading_edge,
        wake,
    })
}

// ---------------------------------------------------------------------------
// truncated-domain point-spectrum scan

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointSpectrumOptions {
    /// Half-width `X` of the truncated domain `[-X, X]` around the front.
    pub half_width: f64,
    pub dx: f64,
    /// Eigenvalues with `Re lambda >= -margin` are inspected.
    pub margin: f64,
    /// Share of weighted eigenfunction mass away from the boundary layers
    /// required for a localized candidate.
    pub localization: f64,
    /// Eigenvalues this close to the origin belong to the essential spectrum
    /// touching it and are never counted.
    pub zero_exclusion: f64,
    /// Repeat on `[-2X, 2X]` and report how far each candidate moves.
    pub check_truncation: bool,
}

impl Default for PointSpectrumOptions {
    fn default() -> Self {
        Self {
            half_width: 60.0,
            dx: 0.5,
            margin: 0.01,
            localization: 0.8,
            zero_exclusion: 1e-3,
            check_truncation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointCandidate {
    pub lambda: Complex64,
    pub localization: f64,
    /// Distance to the nearest eigenvalue on the doubled domain.
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSpectrumReport {
    pub half_width: f64,
    pub dx: f64,
    pub dimension: usize,
    pub rightmost: Complex64,
    /// Localized eigenvalues with `Re lambda >= -margin`, origin excluded.
    pub candidates: Vec<PointCandidate>,
    /// Non-localized eigenvalues with `Re lambda >= -margin`: truncation artifacts.
    pub artifacts: usize,
    pub unstable_candidates: usize,
}

fn linear_interp(grid: &Grid, f: &[f64], x: f64) -> f64 {
    let r = ((x - grid.x0) / grid.dx).clamp(0.0, (f.len() - 1) as f64);
    let i = (r.floor() as usize).min(f.len() - 2);
    let s = r - i as f64;
    f[i] * (1.0 - s) + f[i + 1] * s
}

/// Weighted linearization about a front profile on `[x_f - X, x_f + X]`,
/// Dirichlet at both ends, second-order central differences for `u` and a
/// second-order upwind difference for the transported `w`.
#[allow(clippy::too_many_arguments)]
fn weighted_front_operator(
    grid: &Grid,
    front: &Fields,
    x_front: f64,
    p: &ModelParams<f64>,
    c: f64,
    weight: &WeightSpec<f64>,
    half_width: f64,
    dx: f64,
) -> (Matrix<f64>, Vec<f64>) {
    let n = (2.0 * half_width / dx).round() as usize;
    let h = 2.0 * half_width / n as f64;
    let m = n - 1;
    let xi: Vec<f64> = (1..n).map(|j| -half_width + j as f64 * h).collect();
    let mut a = Matrix::zeros(2 * m, 2 * m);
    for (i, &s) in xi.iter().enumerate() {
        let (_, g1, g2) = weight.log_weight(s);
        let u = linear_interp(grid, &front.u, x_front + s);
        let fu = p.cubic_prime(u);
        // u row
        let drift = c - 2.0 * g1;
        a[(i, i)] = -2.0 / (h * h) + g1 * g1 - g2 - c * g1 + fu;
        if i > 0 {
            a[(i, i - 1)] = 1.0 / (h * h) - drift / (2.0 * h);
        }
        if i + 1 < m {
            a[(i, i + 1)] = 1.0 / (h * h) + drift / (2.0 * h);
        }
        a[(i, m + i)] = -1.0;
        // w row: c (p' - g' p) + eps p_u - eps gamma p
        let r = m + i;
        a[(r, i)] = p.epsilon;
        a[(r, r)] = -c * g1 - p.epsilon * p.gamma;
        if i + 2 < m {
            a[(r, r)] += -3.0 * c / (2.0 * h);
            a[(r, r + 1)] += 4.0 * c / (2.0 * h);
            a[(r, r + 2)] += -c / (2.0 * h);
        } else {
            // next point is interior or the Dirichlet end
            a[(r, r)] += -c / h;
            if i + 1 < m {
                a[(r, r + 1)] += c / h;
            }
        }
    }
    (a, xi)
}

fn localization_score(v: &[Complex64], xi: &[f64], half_width: f64) -> f64 {
    let m = xi.len();
    let (mut inner, mut total) = (0.0, 0.0);
    for (i, &s) in xi.iter().enumerate() {
        let mass = v[i].norm_sqr() + v[m + i].norm_sqr();
        total += mass;
        if s.abs() <= 0.75 * half_width {
            inner += mass;
        }
    }
    if total > 0.0 {
        inner / total
    } else {
        0.0
    }
}

/// Candidate point spectrum of the weighted front linearization from a
/// simulated front snapshot. Advisory: truncation turns the essential
/// spectrum into discrete artifacts, which are told apart from localized
/// eigenvalues by where the eigenfunction's weighted mass sits.
pub fn point_spectrum_scan(
    grid: &Grid,
    front: &Fields,
    p: &ModelParams<f64>,
    c: f64,
    weight: &WeightSpec<f64>,
    opts: &PointSpectrumOptions,
) -> Result<PointSpectrumReport, SpectraError> {
    let np = grid.points();
    if front.u.len() != np || front.w.len() != np {
        return Err(SpectraError::Invalid(format!(
            "snapshot has {} points, grid {np}",
            front.u.len()
        )));
    }
    if !(opts.dx > 0.0 && opts.half_width > 4.0 * opts.dx) {
        return Err(SpectraError::Invalid(format!(
            "half width {} with dx {}",
            opts.half_width, opts.dx
        )));
    }
    let x_front = front_position(grid, &front.u, 0.5 * p.a)
        .ok_or_else(|| SpectraError::Invalid("snapshot has no front".into()))?;
    let reach = if opts.check_truncation { 2.0 } else { 1.0 } * opts.half_width;
    if x_front - reach < grid.x0 || x_front + reach > grid.x1 {
        return Err(SpectraError::Invalid(format!(
            "domain [{}, {}] does not cover front {x_front} +- {reach}",
            grid.x0, grid.x1
        )));
    }
    let solve = |x: f64, vectors: bool| -> Result<(Eigen<f64>, Vec<f64>), SpectraError> {
        let (a, xi) = weighted_front_operator(grid, front, x_front, p, c, weight, x, opts.dx);
        Ok((eigen(&complexify(&a), vectors)?, xi))
    };
    let ((main, xi), wide) = if opts.check_truncation {
        let (a, b) = rayon::join(|| solve(opts.half_width, true), || solve(2.0 * opts.half_width, false));
        (a?, Some(b?.0.values))
    } else {
        (solve(opts.half_width, true)?, None)
    };
    let mut report = PointSpectrumReport {
        half_width: opts.half_width,
        dx: opts.dx,
        dimension: main.values.len(),
        rightmost: main
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap_or_default(),
        candidates: Vec::new(),
        artifacts: 0,
        unstable_candidates: 0,
    };
    for (k, &z) in main.values.iter().enumerate() {
        if z.re < -opts.margin || z.norm() < opts.zero_exclusion {
            continue;
        }
        let v = main.vector(k).unwrap_or_default();
        let score = localization_score(&v, &xi, opts.half_width);
        if score <= opts.localization {
            report.artifacts += 1;
            continue;
        }
        let drift = wide
            .as_ref()
            .map(|w| w.iter().map(|y| (y - z).norm()).fold(f64::INFINITY, f64::min));
        if z.re > 0.0 {
            report.unstable_candidates += 1;
        }
        report.candidates.push(PointCandidate {
            lambda: z,
            localization: score,
            drift,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{solve_spreading_speed, SpreadingOptions};
    use crate::wavetrain::wavetrain_at_speed;
    use std::sync::OnceLock;

    struct Fixture {
        p: ModelParams<f64>,
        ss: SpreadingSpeed<f64>,
        wt: WaveTrain,
    }

    fn fixture() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| {
            let p = ModelParams::new(0.4, 0.1, 0.005).unwrap();
            let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
            let wt = wavetrain_at_speed(&p, ss.c_lin, 256).unwrap();
            Fixture { p, ss, wt }
        })
    }

    fn small_grid(l: f64) -> Vec<f64> {
        let kw = PI / l;
        vec![-kw, -0.5 * kw, -0.1 * kw, 0.0, 0.1 * kw, 0.5 * kw]
    }

    fn opts(grid: Vec<f64>, conj: bool) -> BlochOptions {
        BlochOptions {
            n_modes: 128,
            kappa_grid: Some(grid),
            use_conjugation: conj,
            ..Default::default()
        }
    }

    #[test]
    fn group_velocity_routes_agree() {
        let f = fixture();
        let b = bloch_spectrum(&f.wt, &f.p, f.ss.c_lin, &opts(small_grid(f.wt.l), true)).unwrap();
        assert!(b.c_g < 0.0);
        assert!((b.c_g - b.c_g_fd).abs() < 1e-4, "{} vs {}", b.c_g, b.c_g_fd);
        assert!((b.c_g - b.c_g_fit).abs() < 1e-4);
        assert!((b.d_eff_wt - b.d_eff_fit).abs() < 1e-3 * b.d_eff_wt);
        assert!(b.d_eff_wt > 0.0);
        assert!(b.translation_eigenvalue.norm() < 1e-8);
        assert!(b.translation_correlation > 0.999);
        assert!(b.spectral_gap > 1e-3);
        assert!(b.max_pair_residual < 1e-10);
        assert!(b.report.all(), "{:?}", b.report);
    }

    #[test]
    fn conjugation_mirror_matches_direct_solve() {
        let f = fixture();
        let grid = small_grid(f.wt.l);
        // compare whole spectra: many eigenvalues share Re = -eps gamma, so a
        // truncated list depends on rounding-level ties
        let mut oa = opts(grid.clone(), true);
        let mut ob = opts(grid, false);
        oa.keep = usize::MAX;
        ob.keep = usize::MAX;
        let a = bloch_spectrum(&f.wt, &f.p, f.ss.c_lin, &oa).unwrap();
        let b = bloch_spectrum(&f.wt, &f.p, f.ss.c_lin, &ob).unwrap();
        for (ca, cb) in a.eigencurves.iter().zip(&b.eigencurves) {
            assert_eq!(ca.len(), cb.len());
            for x in ca {
                let d = cb.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-9, "{x} missing, distance {d:e}");
            }
        }
    }

    #[test]
    fn strict_mode_reports_violation_on_unstable_train() {
        // reversing the frame speed turns the profile into a non-steady
        // state whose linearisation has spectrum in the right half-plane
        let f = fixture();
        let mut o = opts(small_grid(f.wt.l), true);
        o.strict = true;
        let r = bloch_spectrum(&f.wt, &f.p, -f.ss.c_lin, &o);
        assert!(matches!(r, Err(SpectraError::HypothesisViolated { .. })), "{r:?}");
    }

    #[test]
    fn floquet_expansion_matches_bloch_curve() {
        let f = fixture();
        let b = bloch_spectrum(&f.wt, &f.p, f.ss.c_lin, &opts(small_grid(f.wt.l), true)).unwrap();
        let e = floquet_expansion(&f.wt, &f.p, f.ss.c_lin, 0.01, &FloquetOptions::default()).unwrap();
        let nu1 = -1.0 / b.c_g;
        let nu2 = -b.d_eff_wt / b.c_g.powi(3);
        assert!((e.nu1 - nu1).abs() < 1e-3, "{} vs {nu1}", e.nu1);
        assert!((e.nu2 - nu2).abs() < 0.05 * nu2.abs(), "{} vs {nu2}", e.nu2);
        for s in &e.samples {
            assert!(s.trace_defect < 1e-8);
            if s.lambda.re > 0.0 {
                assert_eq!((s.unstable, s.stable), (2, 1));
            }
        }
    }

    #[test]
    fn floquet_rejects_large_lambda() {
        let f = fixture();
        let r = floquet_exponents(
            &f.wt,
            &f.p,
            f.ss.c_lin,
            Complex64::new(0.5, 0.0),
            &FloquetOptions::default(),
        );
        assert!(matches!(r, Err(SpectraError::Invalid(_))));
    }

    #[test]
    fn fredholm_index_in_small_weights() {
        let f = fixture();
        let fo = FloquetOptions::default();
        for eta in [1e-3, 1e-2] {
            let r = essential_spectrum_borders(&f.p, &f.ss, &f.wt, (eta, eta), &[0.0, 0.5], 2, &fo).unwrap();
            assert_eq!(r.report.count_wake, 1);
            assert_eq!(r.report.count_leading_edge, 3);
            assert_eq!(r.report.index, -2);
            assert_eq!(r.wake.len(), 3);
            assert!(r.wake[0].1.norm() < 1e-8);
            // leading-edge border touches the origin at k = 0
            assert!(r.leading_edge[0].1.iter().any(|z| z.norm() < 1e-8));
        }
        let r = essential_spectrum_borders(&f.p, &f.ss, &f.wt, (0.0, 0.0), &[], 0, &fo);
        assert!(matches!(r, Err(SpectraError::CountAmbiguity { .. })));
    }

    #[test]
    fn operator_rejects_odd_mode_count() {
        let f = fixture();
        assert!(BlochOperator::new(&f.wt, &f.p, f.ss.c_lin, 63).is_err());
    }

    #[test]
    fn point_spectrum_scan_finds_no_unstable_eigenvalues() {
        use crate::simulate::{run_invasion, Seed, SimConfig};
        let f = fixture();
        let g = Grid::new(-400.0, 250.0, 2216).unwrap().with_sponge(50.0, 1.0).unwrap();
        let seed = Seed::Localized {
            amplitude: 0.1,
            width: 5.0,
            center: 0.0,
        };
        let mut cfg = SimConfig::new(f.p, g.clone(), f.ss.c_lin, 500.0, seed);
        cfg.output_interval = 500.0;
        let run = run_invasion(&cfg).unwrap();
        let weight = WeightSpec::exp_right(f.ss.eta_lin);
        let r = point_spectrum_scan(&g, run.last().unwrap(), &f.p, f.ss.c_lin, &weight, &Default::default()).unwrap();
        assert_eq!(r.unstable_candidates, 0, "{:?}", r.candidates);
        for cand in &r.candidates {
            // the origin belongs to the essential spectrum
            assert!(cand.lambda.norm() >= 1e-3);
            assert!(cand.drift.unwrap() < 1e-3, "{cand:?}");
        }
        // a grid that cannot hold the doubled window is rejected
        let small = Grid::new(-100.0, 100.0, 400).unwrap();
        let snap = crate::simulate::Fields::zeros(small.points());
        assert!(point_spectrum_scan(&small, &snap, &f.p, f.ss.c_lin, &weight, &Default::default()).is_err());
    }
}
