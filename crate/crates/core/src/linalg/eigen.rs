//! Dense nonsymmetric eigensolver: Householder reduction to upper Hessenberg
//! form followed by single-shift complex QR with Wilkinson shifts.
//!
//! Cost is O(n^3); it is meant for matrices up to a few thousand rows.
//! Eigenvectors, when requested, come from back-substitution on the Schur
//! factor and are mapped back with the accumulated unitary transform.

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use super::{Elem, Lu, Matrix};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge for the block ending at row {row} after {iterations} iterations")]
    NoConvergence { row: usize, iterations: usize },
}

/// Eigenvalues and, optionally, unit-norm eigenvectors (as matrix columns).
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<Complex<T>>,
    pub vectors: Option<Matrix<Complex<T>>>,
    /// Total number of QR sweeps.
    pub sweeps: usize,
}

impl<T: Real> Eigen<T> {
    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Option<Vec<Complex<T>>> {
        let v = self.vectors.as_ref()?;
        Some((0..v.rows()).map(|i| v[(i, k)]).collect())
    }
}

/// All eigenvalues of `a`.
pub fn eigenvalues<T: Real>(a: &Matrix<Complex<T>>) -> Result<Vec<Complex<T>>, EigenError> {
    Ok(eigen(a, false)?.values)
}

/// Eigen-decomposition of a general complex matrix.
pub fn eigen<T: Real>(a: &Matrix<Complex<T>>, want_vectors: bool) -> Result<Eigen<T>, EigenError> {
    if !a.is_square() {
        return Err(EigenError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: want_vectors.then(|| Matrix::zeros(0, 0)),
            sweeps: 0,
        });
    }
    let mut h = a.clone();
    let mut z = want_vectors.then(|| Matrix::identity(n));
    hessenberg(&mut h, z.as_mut());
    let sweeps = schur(&mut h, z.as_mut())?;
    let values: Vec<_> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = z.map(|z| schur_vectors(&h, &z));
    Ok(Eigen {
        values,
        vectors,
        sweeps,
    })
}

/// In-place reduction to upper Hessenberg form, accumulating the transform
/// into `q` when given.
fn hessenberg<T: Real>(h: &mut Matrix<Complex<T>>, mut q: Option<&mut Matrix<Complex<T>>>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let two = lit::<T>(2.0);
    let mut v = vec![Complex::<T>::zero(); n];
    for k in 0..n - 2 {
        let mut xnorm2 = T::zero();
        for i in k + 1..n {
            xnorm2 += h[(i, k)].norm_sqr();
        }
        let xnorm = xnorm2.sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == T::zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        // v = x - alpha e1 over rows k+1..n
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let mut vnorm2 = T::zero();
        for vi in &v[k + 1..n] {
            vnorm2 += vi.norm_sqr();
        }
        if vnorm2 == T::zero() {
            continue;
        }
        let scale = two / vnorm2;
        // left: H <- (I - scale v v^H) H, columns k..n
        for j in k..n {
            let mut s = Complex::zero();
            for i in k + 1..n {
                s += v[i].conj() * h[(i, j)];
            }
            s *= scale;
            for i in k + 1..n {
                let t = v[i] * s;
                h[(i, j)] -= t;
            }
        }
        // right: H <- H (I - scale v v^H), all rows
        for i in 0..n {
            let row = h.row_mut(i);
            let mut s = Complex::zero();
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            s *= scale;
            for j in k + 1..n {
                let t = s * v[j].conj();
                row[j] -= t;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex::zero();
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..n {
                let row = q.row_mut(i);
                let mut s = Complex::zero();
                for j in k + 1..n {
                    s += row[j] * v[j];
                }
                s *= scale;
                for j in k + 1..n {
                    let t = s * v[j].conj();
                    row[j] -= t;
                }
            }
        }
    }
}

/// Complex Givens rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
fn givens<T: Real>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>, Complex<T>) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == T::zero() {
        return (T::one(), Complex::zero(), f);
    }
    if fa == T::zero() {
        let s = g.conj() / ga;
        return (T::zero(), s, Complex::new(ga, T::zero()));
    }
    let nrm = fa.hypot(ga);
    let c = fa / nrm;
    let phase = f / fa;
    let s = phase * g.conj() / nrm;
    (c, s, phase * nrm)
}

/// Shifted QR iteration to Schur form. When `z` is given the full triangular
/// factor is formed and the rotations are accumulated.
fn schur<T: Real>(h: &mut Matrix<Complex<T>>, mut z: Option<&mut Matrix<Complex<T>>>) -> Result<usize, EigenError> {
    let n = h.rows();
    let full = z.is_some();
    let ulp = T::epsilon();
    let safmin = T::min_positive_value() / ulp;
    let max_its = 30 * n.max(10);
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;
    loop {
        // locate the active block [l, hi]
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].abs1();
            let mut tst = h[(l - 1, l - 1)].abs1() + h[(l, l)].abs1();
            if tst == T::zero() {
                if l >= 2 {
                    tst += h[(l - 1, l - 2)].re.abs();
                }
                if l < hi {
                    tst += h[(l + 1, l)].re.abs();
                }
            }
            if sub <= safmin.max(ulp * tst) {
                h[(l, l - 1)] = Complex::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        sweeps += 1;
        if its > max_its {
            return Err(EigenError::NoConvergence {
                row: hi,
                iterations: its,
            });
        }

        let mu = if its.is_multiple_of(10) {
            // exceptional shift
            h[(hi, hi)] + Complex::new(lit::<T>(0.75) * h[(hi, hi - 1)].re.abs(), T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        let col_end = if full { n - 1 } else { hi };
        let row_start = if full { 0 } else { l };
        for k in l..hi {
            let (f, g) = if k == l {
                (h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s, r) = givens(f, g);
            if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = Complex::zero();
            }
            for j in k..=col_end {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            let row_end = (k + 2).min(hi);
            for i in row_start..=row_end {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -s * x + y * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let row = z.row_mut(i);
                    let x = row[k];
                    let y = row[k + 1];
                    row[k] = x * c + y * s.conj();
                    row[k + 1] = -s * x + y * c;
                }
            }
        }
    }
    Ok(sweeps)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = lit::<T>(0.5);
    let m = (a - d) * half;
    let disc = (m * m + b * c).sqrt();
    // roots: d + m +/- disc; pick the one nearer d
    let r1 = m + disc;
    let r2 = m - disc;
    if r1.norm() <= r2.norm() {
        d + r1
    } else {
        d + r2
    }
}

/// Eigenvectors from the Schur form `T` and Schur vectors `Z`.
fn schur_vectors<T: Real>(t: &Matrix<Complex<T>>, z: &Matrix<Complex<T>>) -> Matrix<Complex<T>> {
    let n = t.rows();
    let ulp = T::epsilon();
    let tnorm = t.norm_fro().max(T::min_positive_value());
    let small = ulp * tnorm;
    let mut out = Matrix::zeros(n, n);
    let mut y = vec![Complex::<T>::zero(); n];
    for k in 0..n {
        let lam = t[(k, k)];
        for v in y.iter_mut() {
            *v = Complex::zero();
        }
        y[k] = Complex::new(T::one(), T::zero());
        for i in (0..k).rev() {
            let mut s = Complex::<T>::zero();
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < small {
                den = Complex::new(small, T::zero());
            }
            y[i] = -s / den;
        }
        // rescale to avoid overflow on nearly defective pairs
        let ymax = y[..=k].iter().fold(T::zero(), |m, v| m.max(v.abs1()));
        if ymax > T::zero() {
            for v in &mut y[..=k] {
                *v /= ymax;
            }
        }
        let mut nrm2 = T::zero();
        let mut col = vec![Complex::<T>::zero(); n];
        for (i, ci) in col.iter_mut().enumerate() {
            let row = z.row(i);
            let mut s = Complex::zero();
            for j in 0..=k {
                s += row[j] * y[j];
            }
            nrm2 += s.norm_sqr();
            *ci = s;
        }
        let nrm = nrm2.sqrt();
        for (i, ci) in col.into_iter().enumerate() {
            out[(i, k)] = ci / nrm;
        }
    }
    out
}

/// Relative residual `||A v - lambda v|| / ||A||_F` for a pair.
/// Eigenpair nearest to `shift` by inverse iteration with a fixed shift.
///
/// Returns the Rayleigh-quotient eigenvalue and a unit eigenvector once the
/// relative residual `|A v - lambda v| / |A|_F` drops below `tol`.
pub fn inverse_iteration<T: Real>(
    a: &Matrix<Complex<T>>,
    shift: Complex<T>,
    start: Option<&[Complex<T>]>,
    tol: T,
    max_iter: usize,
) -> Result<(Complex<T>, Vec<Complex<T>>), EigenError> {
    if !a.is_square() {
        return Err(EigenError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let scale = a.norm_fro().max(T::min_positive_value());
    let mut mu = shift;
    let mut lu = None;
    for attempt in 0..4 {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= mu;
        }
        match Lu::new(&m) {
            Ok(f) => {
                lu = Some(f);
                break;
            }
            Err(_) => {
                let bump = scale * lit::<T>(1e-13) * lit::<T>((attempt + 1) as f64);
                mu += Complex::new(bump, bump);
            }
        }
    }
    let lu = lu.ok_or(EigenError::NoConvergence { row: 0, iterations: 0 })?;
    let mut v: Vec<Complex<T>> = match start {
        Some(s) => s.to_vec(),
        None => (0..n)
            .map(|i| Complex::from_polar(T::one(), lit::<T>(0.7 * i as f64 + 0.3)))
            .collect(),
    };
    normalize(&mut v);
    for _ in 0..max_iter {
        let mut y = lu.solve(&v);
        normalize(&mut y);
        v = y;
        let av = a.matvec(&v);
        let mut rq = Complex::<T>::zero();
        for (x, y) in v.iter().zip(&av) {
            rq += x.conj() * *y;
        }
        let lambda = rq;
        let mut r = T::zero();
        for (x, y) in av.iter().zip(&v) {
            r += (*x - *y * lambda).norm_sqr();
        }
        if r.sqrt() / scale <= tol {
            return Ok((lambda, v));
        }
    }
    Err(EigenError::NoConvergence {
        row: 0,
        iterations: max_iter,
    })
}

fn normalize<T: Real>(v: &mut [Complex<T>]) {
    let mut s = T::zero();
    for x in v.iter() {
        s += x.norm_sqr();
    }
    let s = s.sqrt();
    if s > T::zero() {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

pub fn pair_residual<T: Real>(a: &Matrix<Complex<T>>, lambda: Complex<T>, v: &[Complex<T>]) -> T {
    let av = a.matvec(v);
    let mut r = T::zero();
    for (x, y) in av.iter().zip(v) {
        r += (*x - *y * lambda).norm_sqr();
    }
    r.sqrt() / a.norm_fro().max(T::min_positive_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> Matrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn diagonal_and_triangular() {
        let a = Matrix::from_fn(4, 4, |i, j| {
            if j >= i {
                Complex64::new((i + 1) as f64, j as f64 * 0.1)
            } else {
                Complex64::zero()
            }
        });
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        for (i, e) in ev.iter().enumerate() {
            assert!((e - Complex64::new((i + 1) as f64, 0.1 * i as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn companion_of_known_polynomial() {
        // roots 1, 2, 3, -1 + i
        let roots = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 1.0),
        ];
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::zero(); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -coeffs[j + 1]
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::zero()
            }
        });
        let ev = eigenvalues(&a).unwrap();
        for r in roots {
            assert!(ev.iter().any(|e| (e - r).norm() < 1e-10), "{ev:?}");
        }
    }

    #[test]
    fn residuals_and_trace() {
        for (n, seed) in [(5, 1), (17, 2), (64, 3), (120, 4)] {
            let a = random_matrix(n, seed);
            let e = eigen(&a, true).unwrap();
            let tr: Complex64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: Complex64 = e.values.iter().sum();
            assert!((tr - sum).norm() < 1e-10 * n as f64);
            for k in 0..n {
                let v = e.vector(k).unwrap();
                assert!(pair_residual(&a, e.values[k], &v) < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn hermitian_gives_real_spectrum() {
        let b = random_matrix(30, 9);
        let a = Matrix::from_fn(30, 30, |i, j| b[(i, j)] + b[(j, i)].conj());
        for e in eigenvalues(&a).unwrap() {
            assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            Complex::new(if i == j { (i + 1) as f32 } else { 0.01 }, 0.0)
        });
        let ev = eigenvalues(&a).unwrap();
        assert_eq!(ev.len(), 3);
        assert!(ev.iter().any(|e| (e.re - 3.0).abs() < 0.05));
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Matrix::<Complex64>::identity(2);
        a[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(eigenvalues(&a).unwrap_err(), EigenError::NonFinite);
    }

    #[test]
    fn inverse_iteration_finds_nearest() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let all = eigenvalues(&a).unwrap();
        let target = all[7] + Complex64::new(1e-3, -1e-3);
        let (lam, v) = inverse_iteration(&a, target, None, 1e-13, 50).unwrap();
        let nearest = all
            .iter()
            .min_by(|x, y| (**x - target).norm().total_cmp(&(**y - target).norm()))
            .unwrap();
        assert!((lam - nearest).norm() < 1e-10);
        assert!(pair_residual(&a, lam, &v) < 1e-12);
    }
}
