//! Linear dispersion relation at the unstable rest state, the linear
//! spreading speed (a simple double root in the weighted frame) and the
//! spatial eigenvalues of the leading-edge linearisation.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::cubic_roots;
use crate::linalg::quadratic_roots;
use crate::model::{jacobian, ModelParams, StateVec};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("double-root Newton solve did not converge in {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("d10 * d02 = {product:.3e} is not positive (d10 = {d10:.3e}, d02 = {d02:.3e})")]
    SignViolation { d10: f64, d02: f64, product: f64 },
    #[error("spectrum check `{check}` failed at k = {k}: lambda = {re} + {im}i")]
    SpectrumViolation {
        check: &'static str,
        k: f64,
        re: f64,
        im: f64,
    },
    #[error("spatial eigenvalues cannot be labelled at sigma = {re} + {im}i")]
    LabelAmbiguity { re: f64, im: f64 },
}

/// One evaluation of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionEval<T> {
    pub lambda: Complex<T>,
    pub nu: Complex<T>,
    pub value: Complex<T>,
}

/// Coefficients of the factored form `(nu^2 + c nu + j11 - lambda)(c nu + j22 - lambda) - j12 j21`.
#[derive(Debug, Clone, Copy)]
struct Coeffs<T> {
    j11: T,
    j22: T,
    j12j21: T,
}

fn coeffs<T: Real>(p: &ModelParams<T>) -> Coeffs<T> {
    let j = jacobian(StateVec::new(T::zero(), T::zero()), p);
    Coeffs {
        j11: j[0][0],
        j22: j[1][1],
        j12j21: j[0][1] * j[1][0],
    }
}

/// `d_c(lambda, nu) = det(D nu^2 + c nu I + F'(0) - lambda I)`, `D = diag(1, 0)`.
pub fn eval_dispersion<T: Real>(p: &ModelParams<T>, c: T, lambda: Complex<T>, nu: Complex<T>) -> Complex<T> {
    let k = coeffs(p);
    let a = nu * nu + nu * c + k.j11 - lambda;
    let b = nu * c + k.j22 - lambda;
    a * b - k.j12j21
}

/// [`eval_dispersion`] packaged with its arguments.
pub fn dispersion_record<T: Real>(p: &ModelParams<T>, c: T, lambda: Complex<T>, nu: Complex<T>) -> DispersionEval<T> {
    DispersionEval {
        lambda,
        nu,
        value: eval_dispersion(p, c, lambda, nu),
    }
}

/// Real-argument evaluation with the partial derivatives needed by Newton:
/// `(d, d_nu, d_nunu, d_lambda, d_c, d_c_nu)` at `lambda = 0`.
fn real_derivs<T: Real>(k: &Coeffs<T>, c: T, nu: T) -> [T; 6] {
    let two = lit::<T>(2.0);
    let a = nu * nu + c * nu + k.j11;
    let b = c * nu + k.j22;
    let d = a * b - k.j12j21;
    let d_nu = (two * nu + c) * b + c * a;
    let d_nunu = two * b + two * c * (two * nu + c);
    let d_lambda = -a - b;
    let d_c = nu * b + nu * a;
    let d_c_nu = b + (two * nu + c) * nu + a + c * nu;
    [d, d_nu, d_nunu, d_lambda, d_c, d_c_nu]
}

/// Outcome of the grid-based spectral checks. A pass is evidence on the grid,
/// not a proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumChecks {
    pub minimal_critical: bool,
    pub no_unstable: bool,
    pub grid_points: usize,
    /// Largest real part of `lambda_{+-}(ik)` over the grid excluding `k = 0`.
    pub max_re_off_origin: f64,
}

/// Linear spreading speed and the double-root data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingSpeed<T> {
    pub c_lin: T,
    pub eta_lin: T,
    pub d10: T,
    pub d02: T,
    #[serde(rename = "D_eff_plus")]
    pub d_eff_plus: T,
    /// `(|d|, |d_nu|)` at the double root.
    pub residuals: (T, T),
    /// Finite-difference (Richardson) estimates of `(d10, d02)`.
    pub d10_d02_fd: (T, T),
    pub iterations: usize,
    pub checks: SpectrumChecks,
}

#[derive(Debug, Clone, Copy)]
pub struct SpreadingOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Check sweep over `k` in `[-k_max, k_max]` with step `dk`.
    pub k_max: f64,
    pub dk: f64,
}

impl Default for SpreadingOptions {
    fn default() -> Self {
        Self {
            max_iter: 60,
            tol: 1e-13,
            k_max: 20.0,
            dk: 1e-2,
        }
    }
}

/// The closed-form ε = 0 values `(2 sqrt(a(1-a)), sqrt(a(1-a)))`.
pub fn kpp_seed<T: Real>(p: &ModelParams<T>) -> (T, T) {
    let s = p.f_prime_zero().sqrt();
    (lit::<T>(2.0) * s, s)
}

/// Newton solve for `(c, eta)` with `d_c(0, -eta) = 0 = d_nu d_c(0, -eta)`.
pub fn solve_spreading_speed<T: Real>(
    p: &ModelParams<T>,
    seed: Option<(T, T)>,
    opts: &SpreadingOptions,
) -> Result<SpreadingSpeed<T>, DispersionError> {
    let k = coeffs(p);
    let (mut c, mut eta) = seed.unwrap_or_else(|| kpp_seed(p));
    let tol: T = lit(opts.tol);
    let mut iterations = 0;
    let mut res = T::infinity();
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let [d, d_nu, d_nunu, _, d_c, d_c_nu] = real_derivs(&k, c, -eta);
        res = d.abs().max(d_nu.abs());
        if res < tol {
            break;
        }
        // unknowns (c, eta); nu = -eta so d/d eta = -d/d nu
        let j11 = d_c;
        let j12 = -d_nu;
        let j21 = d_c_nu;
        let j22 = -d_nunu;
        let det = j11 * j22 - j12 * j21;
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let dc = (d * j22 - d_nu * j12) / det;
        let deta = (j11 * d_nu - j21 * d) / det;
        // damped step keeping eta positive
        let mut t = T::one();
        while eta - t * deta <= T::zero() && t > lit(1e-6) {
            t *= lit(0.5);
        }
        c -= t * dc;
        eta -= t * deta;
    }
    let [d, d_nu, d_nunu, d_lambda, _, _] = real_derivs(&k, c, -eta);
    res = res.min(d.abs().max(d_nu.abs()));
    if !(d.abs() < tol && d_nu.abs() < tol) {
        return Err(DispersionError::NonConvergence {
            iterations,
            residual: res.to_f64().unwrap_or(f64::NAN),
        });
    }
    let d10 = -d_lambda;
    let d02 = d_nunu / lit(2.0);
    if !(d10 * d02 > T::zero()) {
        return Err(DispersionError::SignViolation {
            d10: d10.to_f64().unwrap_or(f64::NAN),
            d02: d02.to_f64().unwrap_or(f64::NAN),
            product: (d10 * d02).to_f64().unwrap_or(f64::NAN),
        });
    }
    let d10_d02_fd = fd_coefficients(p, c, eta);
    let checks = spectrum_checks(p, c, eta, opts)?;
    Ok(SpreadingSpeed {
        c_lin: c,
        eta_lin: eta,
        d10,
        d02,
        d_eff_plus: d02 / d10,
        residuals: (d.abs(), d_nu.abs()),
        d10_d02_fd,
        iterations,
        checks,
    })
}

/// Richardson-extrapolated central differences of `d` at the double root.
fn fd_coefficients<T: Real>(p: &ModelParams<T>, c: T, eta: T) -> (T, T) {
    let nu0 = Complex::new(-eta, T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let f_lam = |h: T| {
        let hp = Complex::new(h, T::zero());
        (eval_dispersion(p, c, hp, nu0) - eval_dispersion(p, c, -hp, nu0)).re / (lit::<T>(2.0) * h)
    };
    let f_nunu = |h: T| {
        let hp = Complex::new(h, T::zero());
        (eval_dispersion(p, c, zero, nu0 + hp) - eval_dispersion(p, c, zero, nu0) * lit::<T>(2.0)
            + eval_dispersion(p, c, zero, nu0 - hp))
        .re / (h * h)
    };
    let rich = |f: &dyn Fn(T) -> T, h: T| (lit::<T>(4.0) * f(h / lit(2.0)) - f(h)) / lit(3.0);
    let d10 = -rich(&f_lam, lit(1e-7));
    // the second difference needs a larger step to stay above round-off
    let d02 = rich(&f_nunu, lit(1e-4)) / lit(2.0);
    (d10, d02)
}

/// Roots `lambda` of `d_c(lambda, nu) = 0` (quadratic in `lambda`).
pub fn temporal_roots<T: Real>(p: &ModelParams<T>, c: T, nu: Complex<T>) -> [Complex<T>; 2] {
    let k = coeffs(p);
    let a0 = nu * nu + nu * c + k.j11;
    let b0 = nu * c + k.j22;
    // (a0 - l)(b0 - l) - j12j21 = l^2 - (a0 + b0) l + a0 b0 - j12j21
    quadratic_roots(-(a0 + b0), a0 * b0 - k.j12j21)
}

fn spectrum_checks<T: Real>(
    p: &ModelParams<T>,
    c: T,
    eta: T,
    opts: &SpreadingOptions,
) -> Result<SpectrumChecks, DispersionError> {
    let n = (opts.k_max / opts.dk).round() as i64;
    let mut max_re_off = f64::NEG_INFINITY;
    let mut worst_k = 0.0;
    let mut worst = Complex::new(0.0, 0.0);
    let mut unstable = None;
    for i in -n..=n {
        let kf = i as f64 * opts.dk;
        let nu = Complex::new(-eta, lit::<T>(kf));
        for l in temporal_roots(p, c, nu) {
            let re = l.re.to_f64().unwrap_or(f64::NAN);
            let im = l.im.to_f64().unwrap_or(f64::NAN);
            if i == 0 && l.norm() < lit(1e-9) {
                continue;
            }
            if re > max_re_off {
                max_re_off = re;
                worst_k = kf;
                worst = Complex::new(re, im);
            }
            if re > 1e-12 && unstable.is_none() {
                unstable = Some((kf, re, im));
            }
        }
    }
    let checks = SpectrumChecks {
        minimal_critical: max_re_off < 0.0,
        no_unstable: unstable.is_none(),
        grid_points: (2 * n + 1) as usize,
        max_re_off_origin: max_re_off,
    };
    if let Some((k, re, im)) = unstable {
        return Err(DispersionError::SpectrumViolation {
            check: "no_unstable",
            k,
            re,
            im,
        });
    }
    if !checks.minimal_critical {
        return Err(DispersionError::SpectrumViolation {
            check: "minimal_critical",
            k: worst_k,
            re: worst.re,
            im: worst.im,
        });
    }
    Ok(checks)
}

/// Spatial eigenvalues of the weighted leading-edge operator at `lambda = sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialEigenvalues<T> {
    pub sigma: Complex<T>,
    pub nu_minus: Complex<T>,
    pub nu_plus: Complex<T>,
    pub nu3: Complex<T>,
    /// Slope of `nu_+(sigma) / sigma` at the origin, estimated by differences.
    pub nu_fr1: T,
    /// True when `|sigma|` is below the branch-point threshold and `nu_-`,
    /// `nu_+` were replaced by their common value.
    pub degenerate: bool,
}

/// The 3x3 matrix `M(lambda)` of the first-order system in `(u1, u1', u2)`
/// for the weighted operator `D (d - eta)^2 + c (d - eta) + F'(0)`.
pub fn first_order_matrix<T: Real>(p: &ModelParams<T>, c: T, eta: T, lambda: Complex<T>) -> [[Complex<T>; 3]; 3] {
    let k = coeffs(p);
    let z = |x: T| Complex::new(x, T::zero());
    let zero = z(T::zero());
    let m21 = z(-eta * eta + c * eta - k.j11) + lambda;
    let m22 = z(lit::<T>(2.0) * eta - c);
    // j21 = eps, j22 = -eps gamma
    let j21 = p.epsilon;
    let m31 = z(-j21 / c);
    let m33 = z(eta - k.j22 / c) + lambda / c;
    [[zero, z(T::one()), zero], [m21, m22, z(T::one())], [m31, zero, m33]]
}

fn char_poly_roots<T: Real>(m: &[[Complex<T>; 3]; 3]) -> [Complex<T>; 3] {
    // det(nu I - M) for M = [[0,1,0],[m21,m22,1],[m31,0,m33]]
    let (m21, m22, m31, m33) = (m[1][0], m[1][1], m[2][0], m[2][2]);
    let b = -(m22 + m33);
    let c = m22 * m33 - m21;
    let d = m21 * m33 - m31;
    cubic_roots(b, c, d)
}

/// `det(M - nu I)` for residual checks.
pub fn first_order_det<T: Real>(m: &[[Complex<T>; 3]; 3], nu: Complex<T>) -> Complex<T> {
    let a = |i: usize, j: usize| if i == j { m[i][j] - nu } else { m[i][j] };
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

#[allow(clippy::type_complexity)]
fn label<T: Real>(
    p: &ModelParams<T>,
    ss: &SpreadingSpeed<T>,
    sigma: Complex<T>,
) -> Result<(Complex<T>, Complex<T>, Complex<T>), DispersionError> {
    let m = first_order_matrix(p, ss.c_lin, ss.eta_lin, sigma * sigma);
    let mut r = char_poly_roots(&m);
    r.sort_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let (x, y, nu3) = (r[0], r[1], r[2]);
    let amb = || DispersionError::LabelAmbiguity {
        re: sigma.re.to_f64().unwrap_or(f64::NAN),
        im: sigma.im.to_f64().unwrap_or(f64::NAN),
    };
    // the far root must be well separated from the near pair
    if nu3.norm() < lit::<T>(4.0) * y.norm() {
        return Err(amb());
    }
    let sx = (x / sigma).re;
    let sy = (y / sigma).re;
    if sx.signum() == sy.signum() {
        return Err(amb());
    }
    Ok(if sx > sy { (y, x, nu3) } else { (x, y, nu3) })
}

/// Spatial eigenvalues at `lambda = sigma^2` with the near-origin pair
/// labelled by the sign of `Re(nu / sigma)`.
pub fn spatial_eigenvalues<T: Real>(
    p: &ModelParams<T>,
    ss: &SpreadingSpeed<T>,
    sigma: Complex<T>,
) -> Result<SpatialEigenvalues<T>, DispersionError> {
    // nu_fr1 from nu_+(h) - nu_-(h) = 2 nu_fr1 h + O(h^3), with Richardson
    let h: T = lit(1e-4);
    let spread = |h: T| -> Result<T, DispersionError> {
        let (m, pl, _) = label(p, ss, Complex::new(h, T::zero()))?;
        Ok(((pl - m) / (h * lit(2.0))).re)
    };
    let nu_fr1 = (lit::<T>(4.0) * spread(h / lit(2.0))? - spread(h)?) / lit(3.0);

    if sigma.norm() < lit(1e-8) {
        let m = first_order_matrix(p, ss.c_lin, ss.eta_lin, sigma * sigma);
        let mut r = char_poly_roots(&m);
        r.sort_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap_or(std::cmp::Ordering::Equal));
        let mid = (r[0] + r[1]) / lit::<T>(2.0);
        return Ok(SpatialEigenvalues {
            sigma,
            nu_minus: mid,
            nu_plus: mid,
            nu3: r[2],
            nu_fr1,
            degenerate: true,
        });
    }
    let (nu_minus, nu_plus, nu3) = label(p, ss, sigma)?;
    Ok(SpatialEigenvalues {
        sigma,
        nu_minus,
        nu_plus,
        nu3,
        nu_fr1,
        degenerate: false,
    })
}

/// Roots `nu` of `d_c(lambda, nu) = 0` (cubic in `nu`), unweighted frame.
pub fn spatial_roots<T: Real>(p: &ModelParams<T>, c: T, lambda: Complex<T>) -> [Complex<T>; 3] {
    let k = coeffs(p);
    let z = |x: T| Complex::new(x, T::zero());
    // (nu^2 + c nu + j11 - l)(c nu + j22 - l) - j12j21, divided by c:
    // nu^3 + (c + (j22 - l)/c) nu^2 + ((j22 - l) + (j11 - l)) nu + ((j11 - l)(j22 - l) - j12j21)/c
    let a0 = z(k.j11) - lambda;
    let b0 = z(k.j22) - lambda;
    let b = z(c) + b0 / c;
    let cc = b0 + a0;
    let d = (a0 * b0 - z(k.j12j21)) / c;
    cubic_roots(b, cc, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn params(eps: f64) -> ModelParams<f64> {
        ModelParams::new(0.4, 0.1, eps).unwrap()
    }

    #[test]
    fn eps_zero_factorisation() {
        let p = params(0.0);
        let c = 0.8;
        for &(l, n) in &[((0.3, 0.1), (-0.2, 0.5)), ((-1.0, 2.0), (0.7, -0.1))] {
            let l = Complex64::new(l.0, l.1);
            let n = Complex64::new(n.0, n.1);
            let want = (n * n + c * n + 0.24 - l) * (c * n - l);
            assert!((eval_dispersion(&p, c, l, n) - want).norm() < 1e-14);
        }
        let l = Complex64::new(0.3, -0.2);
        let d = eval_dispersion(&p, c, l, l / c);
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn kpp_double_root_is_root() {
        let p = params(0.0);
        let c = 2.0 * 0.24f64.sqrt();
        let d = eval_dispersion(&p, c, Complex64::new(0.0, 0.0), Complex64::new(-0.24f64.sqrt(), 0.0));
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn matches_assembled_determinant() {
        let p = params(0.005);
        let c = 0.97;
        let j = jacobian(StateVec::new(0.0, 0.0), &p);
        for i in 0..20 {
            let l = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos());
            let n = Complex64::new((i as f64 * 1.3).cos(), (i as f64 * 0.2).sin());
            let m00 = n * n + c * n + j[0][0] - l;
            let m01 = Complex64::new(j[0][1], 0.0);
            let m10 = Complex64::new(j[1][0], 0.0);
            let m11 = c * n + j[1][1] - l;
            let det = m00 * m11 - m01 * m10;
            assert!((det - eval_dispersion(&p, c, l, n)).norm() < 1e-14);
            // conjugation symmetry
            let dc = eval_dispersion(&p, c, l.conj(), n.conj());
            assert!((dc - eval_dispersion(&p, c, l, n).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn kpp_limit_closed_form() {
        let ss = solve_spreading_speed(&params(0.0), None, &SpreadingOptions::default()).unwrap();
        assert!((ss.c_lin - 2.0 * 0.24f64.sqrt()).abs() < 1e-12);
        assert!((ss.eta_lin - 0.24f64.sqrt()).abs() < 1e-12);
        assert!(ss.residuals.0 < 1e-12 && ss.residuals.1 < 1e-12);
        assert!((ss.d_eff_plus - 1.0).abs() < 1e-10);
    }

    #[test]
    fn small_eps_solution() {
        let p = params(0.005);
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        assert!(ss.d10 * ss.d02 > 0.0);
        assert!(ss.d_eff_plus > 0.0);
        assert!(ss.checks.minimal_critical && ss.checks.no_unstable);
        assert!((ss.d10 - ss.d10_d02_fd.0).abs() < 1e-6 * ss.d10.abs());
        assert!((ss.d02 - ss.d10_d02_fd.1).abs() < 1e-5 * ss.d02.abs());
        // second derivative in nu does not vanish: the double root is simple
        assert!(ss.d02.abs() > 1e-3);
    }

    #[test]
    fn single_precision_solve() {
        let p = ModelParams::<f32>::new(0.4, 0.1, 0.0).unwrap();
        let opts = SpreadingOptions {
            tol: 1e-6,
            ..Default::default()
        };
        let ss = solve_spreading_speed(&p, None, &opts).unwrap();
        assert!((ss.c_lin - 0.9797959).abs() < 1e-5);
    }

    #[test]
    fn spatial_eigenvalue_structure() {
        let p = params(0.005);
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        let s0 = spatial_eigenvalues(&p, &ss, Complex64::new(0.0, 0.0)).unwrap();
        assert!(s0.degenerate);
        assert!(s0.nu_plus.norm() < 1e-6);
        assert!(s0.nu3.re > 0.0);
        let s = spatial_eigenvalues(&p, &ss, Complex64::new(0.01, 0.0)).unwrap();
        assert!(s.nu_minus.re < 0.0 && s.nu_plus.re > 0.0);
        assert!(s.nu3.re > 0.0);
        let m = first_order_matrix(&p, ss.c_lin, ss.eta_lin, s.sigma * s.sigma);
        for nu in [s.nu_minus, s.nu_plus, s.nu3] {
            assert!(first_order_det(&m, nu).norm() < 1e-10);
        }
        let want = (ss.d10 / ss.d02).sqrt();
        assert!((s.nu_fr1 - want).abs() < 1e-6 * want, "{} vs {}", s.nu_fr1, want);
    }

    #[test]
    fn weighted_roots_are_shifted_dispersion_roots() {
        let p = params(0.005);
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        let lam = Complex64::new(0.02, 0.01);
        let m = first_order_matrix(&p, ss.c_lin, ss.eta_lin, lam);
        let w = char_poly_roots(&m);
        let u = spatial_roots(&p, ss.c_lin, lam);
        for r in w {
            let shifted = r - ss.eta_lin;
            assert!(u.iter().any(|x| (x - shifted).norm() < 1e-9));
            assert!(eval_dispersion(&p, ss.c_lin, lam, shifted).norm() < 1e-12);
        }
    }

    #[test]
    fn leading_edge_curve_is_diffusive() {
        let p = params(0.005);
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        let k = 1e-3;
        let roots = temporal_roots(&p, ss.c_lin, Complex64::new(-ss.eta_lin, k));
        let crit = roots
            .iter()
            .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        assert!((crit.re + ss.d_eff_plus * k * k).abs() < 1e-3 * k * k);
    }

    #[test]
    fn ambiguity_for_large_sigma() {
        let p = params(0.005);
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
        assert!(matches!(
            spatial_eigenvalues(&p, &ss, Complex64::new(3.0, 0.0)),
            Err(DispersionError::LabelAmbiguity { .. })
        ));
    }
}
