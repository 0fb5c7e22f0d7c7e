//! Small dense linear algebra: matrices, LU, cubic roots, tridiagonal solves
//! and a complex Hessenberg–QR eigensolver.

mod cubic;
pub mod eigen;
mod lu;
mod tridiag;

use std::fmt::Debug;
use std::ops::{Index, IndexMut, Neg};

use num_complex::Complex;
use num_traits::{Float, NumAssign, Zero};

use crate::scalar::Real;

pub use cubic::{cubic_roots, quadratic_roots};
pub use eigen::{eigen, eigenvalues, inverse_iteration, pair_residual, Eigen, EigenError};
pub use lu::{solve, Lu, LuError};
pub use tridiag::solve_tridiagonal;

/// Field element usable in the dense kernels: a real scalar or a complex one.
pub trait Elem: Copy + NumAssign + Neg<Output = Self> + Debug + Send + Sync + 'static {
    type R: Real;
    /// Cheap magnitude `|re| + |im|`, used for pivoting and deflation.
    fn abs1(self) -> Self::R;
    fn modulus(self) -> Self::R;
    fn conj(self) -> Self;
    fn from_real(r: Self::R) -> Self;
}

macro_rules! real_elem {
    ($t:ty) => {
        impl Elem for $t {
            type R = $t;
            fn abs1(self) -> $t {
                self.abs()
            }
            fn modulus(self) -> $t {
                self.abs()
            }
            fn conj(self) -> $t {
                self
            }
            fn from_real(r: $t) -> $t {
                r
            }
        }
    };
}
real_elem!(f32);
real_elem!(f64);

impl<T: Real> Elem for Complex<T> {
    type R = T;
    fn abs1(self) -> T {
        self.re.abs() + self.im.abs()
    }
    fn modulus(self) -> T {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Elem> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn matvec(&self, x: &[E]) -> Vec<E> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = E::zero();
                for (a, b) in self.row(i).iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * *b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> E::R {
        let mut s = E::R::zero();
        for v in &self.data {
            let m = v.modulus();
            s += m * m;
        }
        s.sqrt()
    }

    pub fn map<F: Elem>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

/// Promote a real matrix to a complex one.
pub fn complexify<T: Real + Elem>(m: &Matrix<T>) -> Matrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let id = Matrix::identity(3);
        assert_eq!(a.matmul(&id), a);
        let x = a.matvec(&[1.0, 0.0, -1.0]);
        assert_eq!(x, vec![-2.0, -2.0, -2.0]);
    }

    #[test]
    fn adjoint_conjugates() {
        let a = Matrix::from_fn(2, 2, |i, j| Complex::new(i as f64, j as f64));
        let h = a.adjoint();
        assert_eq!(h[(0, 1)], Complex::new(1.0, 0.0));
        assert_eq!(h[(1, 0)], Complex::new(0.0, -1.0));
    }
}
