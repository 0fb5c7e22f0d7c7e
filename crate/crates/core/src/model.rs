//! FitzHugh–Nagumo kinetics, linearisation and spatial weights.
//!
//! The system is `u_t = u_xx + u(u+a)(1-u-a) - w`, `w_t = eps (u - gamma w)`,
//! written in a frame moving with speed `c` as
//! `u_t = D u_xixi + c u_xi + F(u)` with `D = diag(1, 0)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is outside its admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("parameter `{name}` is not finite")]
    NotFinite { name: &'static str },
}

/// Parameter triple `(a, gamma, eps)` plus an optional frame-speed override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub a: T,
    pub gamma: T,
    pub epsilon: T,
    /// Frame speed override. `None` means "use the linear spreading speed".
    pub c: Option<T>,
}

impl<T: Real> ModelParams<T> {
    /// Validates eagerly.
    ///
    /// `a` outside `(0, 1/2)` only logs a warning so that exploratory scans
    /// remain possible; `a` must still lie in `(0, 1)` for the kinetics to have
    /// the usual three rest states. `eps = 0` is accepted because the
    /// dispersion relation has a closed form there; operations that need the
    /// slow dynamics reject it themselves.
    pub fn new(a: T, gamma: T, epsilon: T) -> Result<Self, ModelError> {
        check_finite("a", a)?;
        check_finite("gamma", gamma)?;
        check_finite("epsilon", epsilon)?;
        if a <= T::zero() || a >= T::one() {
            return Err(out_of_range("a", a, "(0, 1)"));
        }
        if gamma <= T::zero() || gamma >= lit(4.0) {
            return Err(out_of_range("gamma", gamma, "(0, 4)"));
        }
        if epsilon < T::zero() {
            return Err(out_of_range("epsilon", epsilon, "[0, inf)"));
        }
        if a >= lit(0.5) {
            log::warn!("a = {a} lies outside (0, 1/2); results are exploratory");
        }
        Ok(Self {
            a,
            gamma,
            epsilon,
            c: None,
        })
    }

    /// Same parameters with a frame speed override.
    pub fn with_speed(mut self, c: T) -> Self {
        self.c = Some(c);
        self
    }

    /// True iff `(3 - sqrt 6)/6 < a < 1/2`, the range in which pattern-forming
    /// pulled fronts are known to exist.
    pub fn oscillatory_regime(&self) -> bool {
        let lo = (lit::<T>(3.0) - lit::<T>(6.0).sqrt()) / lit(6.0);
        self.a > lo && self.a < lit(0.5)
    }

    /// `f'(0) = a (1 - a)`, the growth rate of the activator at rest.
    pub fn f_prime_zero(&self) -> T {
        self.a * (T::one() - self.a)
    }

    pub fn cubic(&self, u: T) -> T {
        u * (u + self.a) * (T::one() - u - self.a)
    }

    /// Derivative of the cubic nonlinearity.
    pub fn cubic_prime(&self, u: T) -> T {
        // d/du [u (u+a) (1-u-a)] expanded:
        // = (u+a)(1-u-a) + u(1-u-a) - u(u+a)
        let a = self.a;
        (u + a) * (T::one() - u - a) + u * (T::one() - u - a) - u * (u + a)
    }

    pub fn cubic_second(&self, u: T) -> T {
        // second derivative of -u^3 + (1-2a)u^2 + a(1-a)u
        lit::<T>(-6.0) * u + lit::<T>(2.0) * (T::one() - lit::<T>(2.0) * self.a)
    }
}

fn check_finite<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotFinite { name })
    }
}

fn out_of_range<T: Real>(name: &'static str, v: T, range: &'static str) -> ModelError {
    ModelError::OutOfRange {
        name,
        value: v.to_f64().unwrap_or(f64::NAN),
        range,
    }
}

/// Pointwise state `(u, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec<T> {
    pub u: T,
    pub w: T,
}

impl<T: Real> StateVec<T> {
    pub fn new(u: T, w: T) -> Self {
        Self { u, w }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.w.is_finite()
    }
}

/// `F(u, w) = (u(u+a)(1-u-a) - w, eps (u - gamma w))`.
pub fn reaction<T: Real>(s: StateVec<T>, p: &ModelParams<T>) -> StateVec<T> {
    StateVec {
        u: p.cubic(s.u) - s.w,
        w: p.epsilon * (s.u - p.gamma * s.w),
    }
}

/// Exact Jacobian of [`reaction`], row-major `[[du/du, du/dw], [dw/du, dw/dw]]`.
pub fn jacobian<T: Real>(s: StateVec<T>, p: &ModelParams<T>) -> [[T; 2]; 2] {
    [[p.cubic_prime(s.u), -T::one()], [p.epsilon, -p.epsilon * p.gamma]]
}

/// Which weight to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightKind<T> {
    /// `omega`: 1 on the left, `exp(eta xi)` on the right.
    ExpRight,
    /// `omega_{eta_-, eta_+}`: `exp(eta_minus xi)` for `xi <= -1`,
    /// `exp(eta xi)` for `xi >= 1`.
    ExpTwoSided { eta_minus: T },
    /// `rho_{r_-, r_+}`: `|xi|^{r_minus}` for `xi <= -1`, `|xi|^{r_plus}` for
    /// `xi >= 1`.
    Algebraic { r_minus: T, r_plus: T },
}

/// A spatial weight together with the leading-edge rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec<T> {
    pub eta_lin: T,
    pub kind: WeightKind<T>,
}

/// Quintic smoothstep and its first two derivatives.
fn smoothstep<T: Real>(x: T) -> (T, T, T) {
    let x2 = x * x;
    let x3 = x2 * x;
    let s = x3 * (lit::<T>(10.0) - lit::<T>(15.0) * x + lit::<T>(6.0) * x2);
    let ds = lit::<T>(30.0) * x2 * (T::one() - x) * (T::one() - x);
    let dds = lit::<T>(60.0) * x * (T::one() - x) * (T::one() - lit::<T>(2.0) * x);
    (s, ds, dds)
}

impl<T: Real> WeightSpec<T> {
    pub fn exp_right(eta_lin: T) -> Self {
        Self {
            eta_lin,
            kind: WeightKind::ExpRight,
        }
    }

    /// Logarithm of the weight and its first two derivatives.
    ///
    /// On the exponential blend interval `[0, 1]` the exponent is
    /// `eta xi S(xi)` with `S` the quintic smoothstep, which matches value,
    /// slope and curvature at both ends.
    pub fn log_weight(&self, xi: T) -> (T, T, T) {
        let eta = self.eta_lin;
        let zero = T::zero();
        let one = T::one();
        match self.kind {
            WeightKind::ExpRight => {
                if xi <= zero {
                    (zero, zero, zero)
                } else if xi >= one {
                    (eta * xi, eta, zero)
                } else {
                    blend_right(eta, xi)
                }
            }
            WeightKind::ExpTwoSided { eta_minus } => {
                if xi >= zero {
                    if xi >= one {
                        (eta * xi, eta, zero)
                    } else {
                        blend_right(eta, xi)
                    }
                } else if xi <= -one {
                    (eta_minus * xi, eta_minus, zero)
                } else {
                    let (e, de, dde) = blend_right(-eta_minus, -xi);
                    (e, -de, dde)
                }
            }
            WeightKind::Algebraic { r_minus, r_plus } => {
                if xi >= one {
                    (r_plus * xi.ln(), r_plus / xi, -r_plus / (xi * xi))
                } else if xi <= -one {
                    (r_minus * (-xi).ln(), r_minus / xi, -r_minus / (xi * xi))
                } else {
                    // Cubic Hermite in log space matching value 0 and slope
                    // -r_minus, r_plus at the endpoints.
                    let t = (xi + one) / lit(2.0);
                    let h = lit::<T>(2.0);
                    let m0 = -r_minus * h;
                    let m1 = r_plus * h;
                    let t2 = t * t;
                    let t3 = t2 * t;
                    let h10 = t3 - lit::<T>(2.0) * t2 + t;
                    let h11 = t3 - t2;
                    let dh10 = lit::<T>(3.0) * t2 - lit::<T>(4.0) * t + one;
                    let dh11 = lit::<T>(3.0) * t2 - lit::<T>(2.0) * t;
                    let ddh10 = lit::<T>(6.0) * t - lit::<T>(4.0);
                    let ddh11 = lit::<T>(6.0) * t - lit::<T>(2.0);
                    let e = h10 * m0 + h11 * m1;
                    let de = (dh10 * m0 + dh11 * m1) / h;
                    let dde = (ddh10 * m0 + ddh11 * m1) / (h * h);
                    (e, de, dde)
                }
            }
        }
    }
}

fn blend_right<T: Real>(eta: T, xi: T) -> (T, T, T) {
    let (s, ds, dds) = smoothstep(xi);
    let e = eta * xi * s;
    let de = eta * (s + xi * ds);
    let dde = eta * (lit::<T>(2.0) * ds + xi * dds);
    (e, de, dde)
}

/// Weight value at `xi`.
pub fn weight_eval<T: Real>(ws: &WeightSpec<T>, xi: T) -> T {
    ws.log_weight(xi).0.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams<f64> {
        ModelParams::new(0.4, 0.1, 0.005).unwrap()
    }

    #[test]
    fn origin_is_equilibrium() {
        let r = reaction(StateVec::new(0.0, 0.0), &p());
        assert_eq!(r, StateVec::new(0.0, 0.0));
    }

    #[test]
    fn cubic_root_at_one_minus_a() {
        let p = p();
        let r = reaction(StateVec::new(1.0 - p.a, 0.0), &p);
        assert!(r.u.abs() < 1e-15);
        assert!((r.w - p.epsilon * (1.0 - p.a)).abs() < 1e-15);
    }

    #[test]
    fn reaction_matches_independent_evaluation() {
        // (u, w) = (0.5, 0.1): 0.5 * 0.9 * 0.1 - 0.1 = -0.055 and
        // 0.005 * (0.5 - 0.01) = 0.00245, both exact in decimal.
        let r = reaction(StateVec::new(0.5, 0.1), &p());
        assert!((r.u - (-0.055)).abs() < 1e-15);
        assert!((r.w - 0.00245).abs() < 1e-16);
    }

    #[test]
    fn jacobian_at_origin() {
        let p = p();
        let j = jacobian(StateVec::new(0.0, 0.0), &p);
        assert_eq!(j[0][1], -1.0);
        assert_eq!(j[1][0], p.epsilon);
        assert_eq!(j[1][1], -p.epsilon * p.gamma);
        let h = 1e-6;
        let fd = (reaction(StateVec::new(h, 0.0), &p).u - reaction(StateVec::new(-h, 0.0), &p).u) / (2.0 * h);
        assert!((j[0][0] - 0.24).abs() < 1e-14);
        assert!((fd - 0.24).abs() < 1e-8);
    }

    #[test]
    fn second_derivative_consistent() {
        let p = p();
        for &u in &[-0.7, -0.1, 0.0, 0.3, 0.9] {
            let h = 1e-5;
            let fd = (p.cubic_prime(u + h) - p.cubic_prime(u - h)) / (2.0 * h);
            assert!((fd - p.cubic_second(u)).abs() < 1e-8);
        }
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(0.0, 0.1, 0.005).is_err());
        assert!(ModelParams::new(0.4, 4.0, 0.005).is_err());
        assert!(ModelParams::new(0.4, 0.1, -1e-3).is_err());
        assert!(ModelParams::new(f64::NAN, 0.1, 0.005).is_err());
        // warning only
        assert!(ModelParams::new(0.6, 0.1, 0.005).is_ok());
        assert!(p().oscillatory_regime());
        assert!(!ModelParams::new(0.05, 0.1, 0.005).unwrap().oscillatory_regime());
    }

    #[test]
    fn weight_closed_forms() {
        let ws = WeightSpec::exp_right(0.5);
        assert_eq!(weight_eval(&ws, -5.0), 1.0);
        assert_eq!(weight_eval(&ws, 0.0), 1.0);
        assert_eq!(weight_eval(&ws, 2.0), 1.0f64.exp());
        let mut prev = 0.0;
        for i in 0..1000 {
            let xi = -2.0 + 5.0 * i as f64 / 999.0;
            let w = weight_eval(&ws, xi);
            assert!(w > 0.0 && w >= prev);
            prev = w;
        }
    }

    #[test]
    fn weight_derivatives_match_differences() {
        let specs = [
            WeightSpec::exp_right(0.49),
            WeightSpec {
                eta_lin: 0.3,
                kind: WeightKind::ExpTwoSided { eta_minus: -0.2 },
            },
            WeightSpec {
                eta_lin: 0.0,
                kind: WeightKind::Algebraic {
                    r_minus: 1.0,
                    r_plus: 2.0,
                },
            },
        ];
        let h = 1e-5;
        for ws in &specs {
            for i in 0..200 {
                let xi = -3.0 + 6.0 * (i as f64 + 0.5) / 200.0;
                let (_, d, dd) = ws.log_weight(xi);
                let d_fd = (ws.log_weight(xi + h).0 - ws.log_weight(xi - h).0) / (2.0 * h);
                let dd_fd = (ws.log_weight(xi + h).1 - ws.log_weight(xi - h).1) / (2.0 * h);
                assert!((d - d_fd).abs() < 1e-7, "{ws:?} {xi}");
                assert!((dd - dd_fd).abs() < 1e-6, "{ws:?} {xi}");
            }
        }
    }

    #[test]
    fn algebraic_tails() {
        let ws = WeightSpec {
            eta_lin: 0.0,
            kind: WeightKind::Algebraic {
                r_minus: 1.5,
                r_plus: 0.5,
            },
        };
        assert!((weight_eval(&ws, -4.0f64) - 8.0).abs() < 1e-12);
        assert!((weight_eval(&ws, 9.0f64) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_kernels() {
        let p = ModelParams::<f32>::new(0.4, 0.1, 0.005).unwrap();
        let j = jacobian(StateVec::new(0.0f32, 0.0), &p);
        assert!((j[0][0] - 0.24).abs() < 1e-6);
    }
}
