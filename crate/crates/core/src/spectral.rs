//! Fourier helpers on a uniform periodic grid `s_j = j / n`, `s` in `[0, 1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::Matrix;

/// First-derivative matrix with respect to `s` on `[0, 1)`.
pub fn diff1(n: usize) -> Matrix<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "even number of points required");
    let h = 2.0 * PI / n as f64;
    Matrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as i64 - k as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            2.0 * PI * 0.5 * sign / (d as f64 * h / 2.0).tan()
        }
    })
}

/// Second-derivative matrix with respect to `s` on `[0, 1)`.
pub fn diff2(n: usize) -> Matrix<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "even number of points required");
    let h = 2.0 * PI / n as f64;
    let scale = 4.0 * PI * PI;
    Matrix::from_fn(n, n, |j, k| {
        if j == k {
            scale * (-PI * PI / (3.0 * h * h) - 1.0 / 6.0)
        } else {
            let d = j as i64 - k as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let s = (d as f64 * h / 2.0).sin();
            scale * (-0.5 * sign / (s * s))
        }
    })
}

/// Cached forward/inverse FFT plans for one length.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("n", &self.n).finish()
    }
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coefficients `c_k` with `f(s_j) = sum_k c_k e^{2 pi i k s_j}`, stored in
    /// FFT order (`k = 0, 1, ..., n/2, -(n/2 - 1), ..., -1`).
    pub fn coefficients(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        for b in &mut buf {
            *b *= inv_n;
        }
        buf
    }

    pub fn coefficients_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        for b in &mut buf {
            *b *= inv_n;
        }
        buf
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.inv.process(&mut buf);
        buf
    }

    /// Signed wavenumber of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// `m`-th derivative in `s` of a real periodic sample vector. The Nyquist
    /// mode is dropped for odd `m`.
    pub fn derivative(&self, f: &[f64], m: u32) -> Vec<f64> {
        let mut c = self.coefficients(f);
        for (j, cj) in c.iter_mut().enumerate() {
            let k = self.wavenumber(j);
            if m % 2 == 1 && self.n.is_multiple_of(2) && k == self.n as i64 / 2 {
                *cj = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, 2.0 * PI * k as f64);
            *cj *= ik.powu(m);
        }
        self.synthesize(&c).iter().map(|z| z.re).collect()
    }
}

/// Trigonometric interpolant of periodic samples on `[0, 1)`, evaluated at
/// arbitrary `s` together with its first derivative.
#[derive(Debug, Clone)]
pub struct TrigInterp {
    /// `(k, c_k)` pairs for `k = 0..=n/2`; the real interpolant is
    /// `c_0 + 2 Re sum_{k>0} c_k e^{2 pi i k s}` with the Nyquist term halved.
    coeffs: Vec<Complex64>,
    n: usize,
}

impl TrigInterp {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let f = Fourier::new(n);
        let c = f.coefficients(samples);
        let coeffs = c[..=n / 2].to_vec();
        Self { coeffs, n }
    }

    /// Value and `s`-derivative at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let mut val = self.coeffs[0].re;
        let mut der = 0.0;
        let step = Complex64::from_polar(1.0, 2.0 * PI * s);
        let mut e = step;
        let nyq = self.n / 2;
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            let w = if self.n.is_multiple_of(2) && k == nyq { 1.0 } else { 2.0 };
            let t = *ck * e;
            val += w * t.re;
            if !(self.n.is_multiple_of(2) && k == nyq) {
                der += w * (t * Complex64::new(0.0, 2.0 * PI * k as f64)).re;
            }
            e *= step;
        }
        (val, der)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_matrices_on_trig_polynomial() {
        let n = 32;
        let f: Vec<f64> = (0..n).map(|j| (2.0 * PI * 3.0 * j as f64 / n as f64).sin()).collect();
        let d1 = diff1(n).matvec(&f);
        let d2 = diff2(n).matvec(&f);
        for j in 0..n {
            let s = j as f64 / n as f64;
            let w = 2.0 * PI * 3.0;
            assert!((d1[j] - w * (w * s).cos()).abs() < 1e-10);
            assert!((d2[j] + w * w * (w * s).sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn fft_derivative_matches_matrix() {
        let n = 64;
        let f: Vec<f64> = (0..n).map(|j| ((2.0 * PI * j as f64 / n as f64).cos()).exp()).collect();
        let fft = Fourier::new(n);
        let a = fft.derivative(&f, 1);
        let b = diff1(n).matvec(&f);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        let a2 = fft.derivative(&f, 2);
        let b2 = diff2(n).matvec(&f);
        for (x, y) in a2.iter().zip(&b2) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolant_reproduces_samples_and_smooth_values() {
        let n = 48;
        let g = |s: f64| ((2.0 * PI * s).sin() * 0.7).exp();
        let f: Vec<f64> = (0..n).map(|j| g(j as f64 / n as f64)).collect();
        let it = TrigInterp::new(&f);
        for j in 0..n {
            assert!((it.eval(j as f64 / n as f64).0 - f[j]).abs() < 1e-12);
        }
        let s = 0.123;
        let h = 1e-6;
        let (v, d) = it.eval(s);
        assert!((v - g(s)).abs() < 1e-12);
        assert!((d - (g(s + h) - g(s - h)) / (2.0 * h)).abs() < 1e-6);
    }
}
