use num_traits::{Float, Zero};
use thiserror::Error;

use super::{Elem, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is numerically singular (pivot {pivot} at column {col})")]
    Singular { col: usize, pivot: f64 },
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<E> {
    lu: Matrix<E>,
    perm: Vec<usize>,
    sign_flips: usize,
    min_pivot: f64,
    max_pivot: f64,
}

impl<E: Elem> Lu<E> {
    pub fn new(a: &Matrix<E>) -> Result<Self, LuError> {
        if !a.is_square() {
            return Err(LuError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0;
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs1();
            for i in k + 1..n {
                let v = lu[(i, k)].abs1();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            let best64 = num_traits::ToPrimitive::to_f64(&best).unwrap_or(0.0);
            if best64 == 0.0 || !best64.is_finite() {
                return Err(LuError::Singular { col: k, pivot: best64 });
            }
            min_pivot = min_pivot.min(best64);
            max_pivot = max_pivot.max(best64);
            if p != k {
                perm.swap(p, k);
                sign_flips += 1;
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            let (head, tail) = lu.data.split_at_mut((k + 1) * n);
            let prow = &head[k * n + k..];
            for i in 0..(n - k - 1) {
                let row = &mut tail[i * n..(i + 1) * n];
                let f = row[k] / pivot;
                row[k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = f * prow[j - k];
                    row[j] -= t;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            sign_flips,
            min_pivot,
            max_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Ratio of smallest to largest pivot magnitude; a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve(&self, b: &[E]) -> Vec<E> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<E> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }

    /// Determinant. May overflow for large systems; see [`Lu::log_abs_det`].
    pub fn det(&self) -> E {
        let mut d = E::one();
        for i in 0..self.dim() {
            d *= self.lu[(i, i)];
        }
        if self.sign_flips % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn log_abs_det(&self) -> E::R {
        let mut s = E::R::zero();
        for i in 0..self.dim() {
            s += self.lu[(i, i)].modulus().ln();
        }
        s
    }
}

/// Solve `A x = b` in one call.
pub fn solve<E: Elem>(a: &Matrix<E>, b: &[E]) -> Result<Vec<E>, LuError> {
    Ok(Lu::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_real_system() {
        let a = Matrix::from_rows(3, 3, vec![2.0, 1.0, 1.0, 4.0, -6.0, 0.0, -2.0, 7.0, 2.0]);
        let x_true = [1.0, -2.0, 3.0];
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
        let lu = Lu::new(&a).unwrap();
        assert!((lu.det() - (-16.0)).abs() < 1e-12);
    }

    #[test]
    fn solves_complex_system() {
        let n = 6;
        let a = Matrix::from_fn(n, n, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64)
                + if i == j {
                    Complex64::new(5.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
        });
        let x_true: Vec<_> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Lu::new(&a), Err(LuError::Singular { .. })));
    }
}
