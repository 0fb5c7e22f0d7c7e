//! Independent reference routes for the numerical kernels: eigenvalues from
//! the characteristic polynomial in double-double arithmetic, and finite
//! differences for the reaction Jacobian.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, EigenError, Matrix};
use crate::model::{jacobian, reaction, ModelParams, StateVec};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`, about 32 digits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let e = self.hi.mul_add(b.hi, -p);
        quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2) + Dd::from_f64(q3)
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    pub fn from_c64(z: Complex64) -> Self {
        Cdd {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_f64(self) -> f64 {
        self.to_c64().norm()
    }

    pub fn recip(self) -> Cdd {
        let d = (self.re * self.re + self.im * self.im).recip();
        Cdd {
            re: self.re * d,
            im: -(self.im * d),
        }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

/// Coefficients of `det(λI − A)`, leading coefficient first, by the
/// division-free Samuelson–Berkowitz recursion in double-double.
pub fn characteristic_polynomial(a: &Matrix<Complex64>) -> Vec<Cdd> {
    let n = a.rows();
    let at = |i: usize, j: usize| Cdd::from_c64(a.row(i)[j]);
    if n == 0 {
        return vec![Cdd::from_c64(Complex64::new(1.0, 0.0))];
    }
    let one = Cdd::from_c64(Complex64::new(1.0, 0.0));
    // polynomial of the trailing 1x1 block
    let mut p = vec![one, -at(n - 1, n - 1)];
    for i in (0..n - 1).rev() {
        let k = n - 1 - i; // size of the trailing block below row i
                           // Toeplitz column: 1, −a_ii, −R S, −R A S, ..., −R A^{k−1} S
        let mut col = Vec::with_capacity(k + 2);
        col.push(one);
        col.push(-at(i, i));
        let mut v: Vec<Cdd> = (0..k).map(|r| at(i + 1 + r, i)).collect(); // S
        for _ in 0..k {
            let rs = (0..k).fold(Cdd::ZERO, |acc, c| acc + at(i, i + 1 + c) * v[c]);
            col.push(-rs);
            let nv: Vec<Cdd> = (0..k)
                .map(|r| (0..k).fold(Cdd::ZERO, |acc, c| acc + at(i + 1 + r, i + 1 + c) * v[c]))
                .collect();
            v = nv;
        }
        // (k+2) x (k+1) lower-triangular Toeplitz times p (length k+1)
        let q: Vec<Cdd> = (0..k + 2)
            .map(|r| (0..=r.min(k)).fold(Cdd::ZERO, |acc, c| acc + col[r - c] * p[c]))
            .collect();
        p = q;
    }
    p
}

/// Horner evaluation of `p` and `p'`.
fn horner(p: &[Cdd], z: Cdd) -> (Cdd, Cdd) {
    let mut v = p[0];
    let mut d = Cdd::ZERO;
    for c in &p[1..] {
        d = d * z + v;
        v = v * z + *c;
    }
    (v, d)
}

/// All roots of a monic polynomial by Aberth–Ehrlich iteration in
/// double-double, started on a circle enclosing the roots.
pub fn polynomial_roots(p: &[Cdd], max_iter: usize) -> Vec<Complex64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let radius = (1..=n)
        .map(|k| p[k].norm_f64().powf(1.0 / k as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Cdd> = (0..n)
        .map(|k| {
            Cdd::from_c64(Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4,
            ))
        })
        .collect();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, d) = horner(p, z[i]);
            if v.norm_f64() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = v * d.recip();
            let mut s = Cdd::ZERO;
            for j in 0..n {
                if j != i {
                    s = s + (z[i] - z[j]).recip();
                }
            }
            let one = Cdd::from_c64(Complex64::new(1.0, 0.0));
            let w = ratio * (one - ratio * s).recip();
            z[i] = z[i] - w;
            if w.norm_f64() <= 1e-28 * (1.0 + z[i].norm_f64()) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z.into_iter().map(Cdd::to_c64).collect()
}

/// Matrix with independent entries uniform in the unit square.
pub fn random_complex_matrix(n: usize, rng_seed: u64) -> Matrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Matrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenOracleReport {
    pub sizes: Vec<usize>,
    /// Worst distance from a computed eigenvalue to its matched reference root,
    /// per matrix.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Match two point sets greedily by increasing distance.
fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut ua, mut ub) = (vec![false; a.len()], vec![false; b.len()]);
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !ua[i] && !ub[j] {
            ua[i] = true;
            ub[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Compare the QR eigensolver with characteristic-polynomial roots on seeded
/// random complex matrices.
pub fn eigensolver_oracle(sizes: &[usize], rng_seed: u64) -> Result<EigenOracleReport, EigenError> {
    let mut errors = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        let a = random_complex_matrix(n, rng_seed.wrapping_add(k as u64));
        let qr = eigenvalues(&a)?;
        let reference = polynomial_roots(&characteristic_polynomial(&a), 2000);
        errors.push(matched_distance(&qr, &reference));
    }
    Ok(EigenOracleReport {
        sizes: sizes.to_vec(),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        errors,
    })
}

/// Worst relative deviation between the analytic reaction Jacobian and
/// central differences over `samples` seeded states in `[−1.5, 1.5]²`.
pub fn jacobian_fd_error(p: &ModelParams<f64>, samples: usize, rng_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let s = StateVec::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let j = jacobian(s, p);
        let du = |d: f64| reaction(StateVec::new(s.u + d, s.w), p);
        let dw = |d: f64| reaction(StateVec::new(s.u, s.w + d), p);
        let (up, um, wp, wm) = (du(h), du(-h), dw(h), dw(-h));
        let fd = [
            [(up.u - um.u) / (2.0 * h), (wp.u - wm.u) / (2.0 * h)],
            [(up.w - um.w) / (2.0 * h), (wp.w - wm.w) / (2.0 * h)],
        ];
        let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((j[r][c] - fd[r][c]).abs() / scale);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_keeps_small_parts() {
        let a = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        assert_eq!(a.hi, 1.0);
        assert!((a.lo - 1e-20).abs() < 1e-36);
        let third = Dd::ONE / Dd::from_f64(3.0);
        let back = third * Dd::from_f64(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn characteristic_polynomial_of_companion() {
        // roots 1, 2, 3: λ³ − 6λ² + 11λ − 6
        let a = Matrix::from_rows(
            3,
            3,
            [6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
        );
        let p: Vec<Complex64> = characteristic_polynomial(&a).into_iter().map(Cdd::to_c64).collect();
        let want = [1.0, -6.0, 11.0, -6.0];
        for (x, w) in p.iter().zip(want) {
            assert!((x - Complex64::new(w, 0.0)).norm() < 1e-14);
        }
        let mut r: Vec<f64> = polynomial_roots(&characteristic_polynomial(&a), 500)
            .iter()
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        for (x, w) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - w).abs() < 1e-14);
        }
    }

    #[test]
    fn qr_agrees_with_extended_precision_roots() {
        let rep = eigensolver_oracle(&[4, 9, 16, 33, 64], 7).unwrap();
        assert!(rep.max_error < 1e-6, "{rep:?}");
    }

    #[test]
    fn jacobian_matches_differences() {
        let p = ModelParams::new(0.4, 0.1, 0.005).unwrap();
        assert!(jacobian_fd_error(&p, 200, 3) < 1e-6);
    }
}
