//! Adaptive Dormand–Prince 5(4) integrator for complex linear and nonlinear
//! systems `y' = f(t, y)`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            h0: 1e-3,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate from `t0` to `t1` (either direction), overwriting `y`.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y: &mut [Complex64], opts: &OdeOptions) -> Result<OdeStats, OdeError>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y.len();
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok(stats);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut h = opts.h0.min(span);
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut tmp = vec![Complex64::default(); n];
    let mut ynew = vec![Complex64::default(); n];
    f(t, y, &mut k[0]);
    stats.evaluations += 1;
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        let mut last = false;
        if h >= (t1 - t).abs() {
            h = (t1 - t).abs();
            last = true;
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(OdeError::StepUnderflow { t, h });
        }
        let hs = h * dir;
        for i in 0..n {
            tmp[i] = y[i] + k[0][i] * (hs * A21);
        }
        stage(&mut f, &mut k, 1, t + C2 * hs, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * hs;
        }
        stage(&mut f, &mut k, 2, t + C3 * hs, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * hs;
        }
        stage(&mut f, &mut k, 3, t + C4 * hs, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * hs;
        }
        stage(&mut f, &mut k, 4, t + C5 * hs, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * hs;
        }
        stage(&mut f, &mut k, 5, t + hs, &tmp);
        for i in 0..n {
            ynew[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * hs;
        }
        stage(&mut f, &mut k, 6, t + hs, &ynew);
        stats.evaluations += 6;
        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&ynew);
            let (first, rest) = k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
            stats.accepted += 1;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(stats)
}

fn stage<F>(f: &mut F, k: &mut [Vec<Complex64>], idx: usize, t: f64, y: &[Complex64])
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let (_, tail) = k.split_at_mut(idx);
    f(t, y, &mut tail[0]);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_exponential() {
        let lam = Complex64::new(-0.3, 2.0);
        let mut y = vec![Complex64::new(1.0, 0.0)];
        dopri5(|_, y, d| d[0] = lam * y[0], 0.0, 5.0, &mut y, &OdeOptions::default()).unwrap();
        let exact = (lam * 5.0).exp();
        assert!((y[0] - exact).norm() < 1e-10);
    }

    #[test]
    fn backward_integration_inverts() {
        let mut y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let rhs = |t: f64, y: &[Complex64], d: &mut [Complex64]| {
            d[0] = y[1];
            d[1] = -y[0] * (1.0 + 0.5 * t.sin());
        };
        let opts = OdeOptions::default();
        dopri5(rhs, 0.0, 3.0, &mut y, &opts).unwrap();
        dopri5(rhs, 3.0, 0.0, &mut y, &opts).unwrap();
        assert!((y[0] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(y[1].norm() < 1e-9);
    }
}
