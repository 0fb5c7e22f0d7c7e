use num_complex::Complex;

use crate::scalar::{lit, Real};

/// Roots of `z^2 + b z + c` in a cancellation-free form.
pub fn quadratic_roots<T: Real>(b: Complex<T>, c: Complex<T>) -> [Complex<T>; 2] {
    let two = lit::<T>(2.0);
    let disc = (b * b - c * lit::<T>(4.0)).sqrt();
    // pick the sign that avoids cancellation in -b -/+ sqrt(disc)
    let q = if (b.conj() * disc).re >= T::zero() {
        -(b + disc) / two
    } else {
        -(b - disc) / two
    };
    if q.norm() == T::zero() {
        return [Complex::new(T::zero(), T::zero()); 2];
    }
    [q, c / q]
}

/// Roots of the monic cubic `z^3 + b z^2 + c z + d` by Cardano's formula in
/// complex arithmetic, followed by two Newton polishing steps per root.
pub fn cubic_roots<T: Real>(b: Complex<T>, c: Complex<T>, d: Complex<T>) -> [Complex<T>; 3] {
    let three = lit::<T>(3.0);
    let shift = b / three;
    let p = c - b * b / three;
    let q = b * b * b * lit::<T>(2.0 / 27.0) - b * c / three + d;
    let half_q = q / lit::<T>(2.0);
    let disc = (half_q * half_q + p * p * p / lit::<T>(27.0)).sqrt();
    let s1 = -half_q + disc;
    let s2 = -half_q - disc;
    let s = if s1.norm() >= s2.norm() { s1 } else { s2 };
    let zero = Complex::new(T::zero(), T::zero());
    let mut roots = if s.norm() == T::zero() {
        // p = q = 0: triple root of the depressed cubic
        [zero; 3]
    } else {
        let u = s.powf(T::one() / three);
        let w = Complex::new(lit::<T>(-0.5), three.sqrt() / lit(2.0));
        let mut out = [zero; 3];
        let mut uk = u;
        for r in out.iter_mut() {
            *r = uk - p / (uk * three);
            uk *= w;
        }
        out
    };
    for r in roots.iter_mut() {
        *r -= shift;
        let eval = |z: Complex<T>| ((z + b) * z + c) * z + d;
        for _ in 0..2 {
            let f = eval(*r);
            let df = (*r * three + b * lit::<T>(2.0)) * *r + c;
            if df.norm() == T::zero() {
                break;
            }
            let cand = *r - f / df;
            // keep the step only if it improves the residual; near a double
            // root the derivative is tiny and Newton can be thrown far away
            if cand.re.is_finite() && cand.im.is_finite() && eval(cand).norm() < f.norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn contains(roots: &[Complex64], z: Complex64, tol: f64) -> bool {
        roots.iter().any(|r| (r - z).norm() < tol)
    }

    #[test]
    fn cubic_from_known_roots() {
        let z = [c(1.0, 2.0), c(-0.5, 0.0), c(3.0, -1.0)];
        let b = -(z[0] + z[1] + z[2]);
        let cc = z[0] * z[1] + z[0] * z[2] + z[1] * z[2];
        let d = -(z[0] * z[1] * z[2]);
        let r = cubic_roots(b, cc, d);
        for zi in z {
            assert!(contains(&r, zi, 1e-12), "{r:?}");
        }
    }

    #[test]
    fn cubic_double_root() {
        // (z-1)^2 (z+2) = z^3 - 3z + 2
        let r = cubic_roots(c(0.0, 0.0), c(-3.0, 0.0), c(2.0, 0.0));
        assert!(contains(&r, c(-2.0, 0.0), 1e-12));
        assert_eq!(
            r.iter().filter(|x| (**x - c(1.0, 0.0)).norm() < 1e-6).count(),
            2,
            "{r:?}"
        );
    }

    #[test]
    fn cubic_triple_root() {
        let r = cubic_roots(c(-3.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0));
        for x in r {
            assert!((x - c(1.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn quadratic_roots_stable() {
        let r = quadratic_roots(c(-1e8, 0.0), c(1.0, 0.0));
        assert!(contains(&r, c(1e-8, 0.0), 1e-20));
        assert!(contains(&r, c(1e8, 0.0), 1e-6));
    }
}
