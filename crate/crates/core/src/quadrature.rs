//! Adaptive Gauss–Kronrod (7/15) quadrature of complex-valued integrands on a
//! real parameter interval.

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature stalled after {subdivisions} subdivisions (error estimate {error:e})")]
    Stall { subdivisions: usize, error: f64 },
    #[error("integrand returned a non-finite value at t = {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: Complex<T>,
    pub error: T,
    pub evaluations: usize,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<T> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> Result<(Complex<T>, T), QuadratureError> {
    let half = (b - a) * lit::<T>(0.5);
    let mid = (a + b) * lit::<T>(0.5);
    let check = |v: Complex<T>, t: T| {
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite {
                at: t.to_f64().unwrap_or(f64::NAN),
            })
        }
    };
    let fc = check(f(mid), mid)?;
    let mut kron = fc * lit::<T>(WGK[7]);
    let mut gauss = fc * lit::<T>(WG[3]);
    for (k, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * lit::<T>(x);
        let t1 = mid - dx;
        let t2 = mid + dx;
        let s = check(f(t1), t1)? + check(f(t2), t2)?;
        kron += s * lit::<T>(WGK[k]);
        if k % 2 == 1 {
            gauss += s * lit::<T>(WG[k / 2]);
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    Ok((kron, (kron - gauss).norm()))
}

/// Integrate `f` over `[a, b]` by global adaptive bisection.
pub fn integrate<T: Real, F: FnMut(T) -> Complex<T>>(
    f: F,
    a: T,
    b: T,
    opts: &QuadOptions,
) -> Result<QuadResult<T>, QuadratureError> {
    integrate_panels(f, &[a, b], opts)
}

/// Global adaptive bisection starting from the panels between consecutive
/// `breaks`. Useful when the integrand is concentrated at known points.
pub fn integrate_panels<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    breaks: &[T],
    opts: &QuadOptions,
) -> Result<QuadResult<T>, QuadratureError> {
    let mut panels = Vec::with_capacity(breaks.len());
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1])?;
        evaluations += 15;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let initial = panels.len();
    let abs_tol = lit::<T>(opts.abs_tol);
    let rel_tol = lit::<T>(opts.rel_tol);
    loop {
        let mut total = Complex::<T>::zero();
        let mut err = T::zero();
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            total += p.value;
            err += p.error;
            if p.error > panels[worst].error {
                worst = i;
            }
        }
        let target = abs_tol.max(rel_tol * total.norm());
        if err <= target || panels.is_empty() {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
                subdivisions: panels.len().saturating_sub(initial),
            });
        }
        if panels.len() > opts.max_subdivisions + initial {
            return Err(QuadratureError::Stall {
                subdivisions: panels.len() - initial,
                error: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let p = panels.swap_remove(worst);
        let m = (p.a + p.b) * lit::<T>(0.5);
        if !(m > p.a.min(p.b) && m < p.a.max(p.b)) {
            // interval exhausted at this precision
            return Err(QuadratureError::Stall {
                subdivisions: panels.len(),
                error: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (vl, el) = gk15(&mut f, p.a, m)?;
        let (vr, er) = gk15(&mut f, m, p.b)?;
        evaluations += 30;
        panels.push(Panel {
            a: p.a,
            b: m,
            value: vl,
            error: el,
        });
        panels.push(Panel {
            a: m,
            b: p.b,
            value: vr,
            error: er,
        });
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    opts: &QuadOptions,
) -> Result<(T, T), QuadratureError> {
    let r = integrate(|t| Complex::new(f(t), T::zero()), a, b, opts)?;
    Ok((r.value.re, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate_real(|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn circle_residue() {
        let r = integrate(
            |t: f64| {
                let z = Complex::from_polar(0.3, t);
                let dz = Complex::new(0.0, 1.0) * z;
                dz / z
            },
            0.0,
            2.0 * PI,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - Complex::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn peaked_integrand_adapts() {
        let (v, _) = integrate_real(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, &QuadOptions::default()).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn panels_match_single_interval() {
        let f = |x: f64| Complex::new((3.0 * x).cos(), x * x);
        let opts = QuadOptions::default();
        let a = integrate(f, 0.0, 2.0, &opts).unwrap();
        let b = integrate_panels(f, &[0.0, 0.1, 0.7, 2.0], &opts).unwrap();
        assert!((a.value - b.value).norm() < 1e-12);
    }

    #[test]
    fn stall_reported() {
        let opts = QuadOptions {
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate_real(|x: f64| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &opts);
        assert!(matches!(r, Err(QuadratureError::Stall { .. })));
    }

    #[test]
    fn f32_instance() {
        let opts = QuadOptions {
            abs_tol: 1e-6,
            rel_tol: 1e-5,
            ..Default::default()
        };
        let (v, _) = integrate_real(|x: f32| x.exp(), 0.0, 1.0, &opts).unwrap();
        assert!((v - (1.0f32.exp() - 1.0)).abs() < 1e-5);
    }
}
