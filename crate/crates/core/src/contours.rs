//! Contour integrals for inverse-Laplace decay estimates on closed-form model
//! resolvents.
//!
//! Every integral here has the form `∫_Γ e^{λt} g(λ) dλ` along a piecewise
//! parameterized contour Γ. The contours are the ones that make the decay
//! visible: a tangent parabola in the σ = √λ variable for branched families, a
//! sector with a shrinking circle for families that blow up at the branch
//! point, a parabola through δ/t for wake families, and pointwise contours that
//! pass through the real saddle of `e^{λt + ν(λ)x}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{fit_decay, DecayFit, DiagnosticsError};
use crate::quadrature::{integrate_panels, QuadOptions, QuadratureError};

#[derive(Debug, Error)]
pub enum ContoursError {
    #[error("contour quadrature stalled: {0}")]
    QuadratureStall(#[from] QuadratureError),
    #[error("hypothesis violated for {family}: {detail}")]
    HypothesisViolated { family: String, detail: String },
    #[error("contour leaves its region: {0}")]
    ContourLeavesBall(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Fit(#[from] DiagnosticsError),
}

pub type Result<T> = std::result::Result<T, ContoursError>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Geometry constants shared by the contour constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourParams {
    /// Radius of the ball all local contours live in.
    pub delta: f64,
    /// Half-opening of the sector region for blowup families.
    pub theta0: f64,
    /// The sector contour runs along rays at angle `theta0 - delta_tilde`.
    pub delta_tilde: f64,
    /// Curvature of the tangent parabola `σ(a) = ia + c2 a²`.
    pub c2: f64,
    /// Half-length of the tangent parabola in `a`.
    pub a_star: f64,
    /// Curvature of the wake parabola `δ/t + ia − d a²`.
    pub d: f64,
    /// Half-length of the wake parabola in `a`.
    pub wake_a_star: f64,
    /// Constant of the cubic boundary curve `−k² + iCk³`.
    pub c_fr3: f64,
    /// Constant of the wake boundary curve `ik − Ck²`.
    pub c_wt: f64,
    /// Angle of the endpoints of the tangent contour on `|λ| = δ`.
    pub end_angle: f64,
    /// Pointwise contours: clip for the saddle `η_*`.
    pub delta0: f64,
    /// Pointwise contours: half-height of the saddle segment.
    pub delta1: f64,
    /// Pointwise contours: real part of the connector corners.
    pub delta2: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            delta: 0.1,
            theta0: 0.75 * PI,
            delta_tilde: PI / 12.0,
            c2: 10.0,
            a_star: 0.05,
            d: 0.5,
            wake_a_star: 0.09,
            c_fr3: 1.0,
            c_wt: 0.75,
            end_angle: 0.5 * PI + PI / 8.0,
            delta0: 1e-4,
            delta1: 0.05,
            delta2: 1e-4,
        }
    }
}

impl ContourParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("delta", self.delta),
            ("c2", self.c2),
            ("a_star", self.a_star),
            ("d", self.d),
            ("wake_a_star", self.wake_a_star),
            ("c_fr3", self.c_fr3),
            ("c_wt", self.c_wt),
            ("delta0", self.delta0),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ContoursError::Invalid(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.theta0 > 0.5 * PI && self.theta0 < PI) {
            return Err(ContoursError::Invalid(format!(
                "theta0 = {} must lie in (π/2, π) so the sector rays reach the left half-plane",
                self.theta0
            )));
        }
        let ray = self.theta0 - self.delta_tilde;
        if !(self.delta_tilde > 0.0 && ray > 0.5 * PI) {
            return Err(ContoursError::Invalid(format!(
                "sector rays at angle {ray} must point into the left half-plane"
            )));
        }
        if self.d >= self.c_wt {
            return Err(ContoursError::Invalid(format!(
                "wake parabola curvature d = {} must be below c_wt = {}",
                self.d, self.c_wt
            )));
        }
        if self.wake_a_star >= self.delta || self.a_star * (1.0 + self.c2 * self.a_star) >= self.delta.sqrt() {
            return Err(ContoursError::Invalid("parabola half-lengths exceed the ball".into()));
        }
        Ok(())
    }

    /// Upper endpoint shared by the wake and pointwise contours: the point on
    /// `|λ| = δ` halfway (in real part) between the imaginary axis and the wake
    /// boundary curve.
    pub fn wake_endpoint(&self) -> C64 {
        // point of ik − C k² with modulus δ, by bisection on k
        let (mut lo, mut hi) = (0.0, self.delta);
        for _ in 0..100 {
            let k = 0.5 * (lo + hi);
            let m = (k * k + (self.c_wt * k * k).powi(2)).sqrt();
            if m < self.delta {
                lo = k;
            } else {
                hi = k;
            }
        }
        let re = -0.5 * self.c_wt * lo * lo;
        C64::new(re, (self.delta * self.delta - re * re).sqrt())
    }
}

/// Analyticity regions, each with its defining inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// Ball of radius δ, right of `{−k² + iCk³}`.
    FrontBranched {
        delta: f64,
        c: f64,
    },
    /// Punctured sector `0 < |λ| < δ`, `|arg λ| < θ₀`.
    Sector {
        delta: f64,
        theta0: f64,
    },
    /// Ball of radius δ, right of `{ik − Ck²}`.
    Wake {
        delta: f64,
        c: f64,
    },
    Ball {
        delta: f64,
    },
    Plane,
}

impl Region {
    pub fn contains(&self, l: C64) -> bool {
        const SLACK: f64 = 1e-12;
        match *self {
            Region::FrontBranched { delta, c } => {
                let k = (l.im.abs() / c).cbrt();
                l.norm() < delta * (1.0 + SLACK) && l.re >= -k * k - SLACK * delta
            }
            Region::Sector { delta, theta0 } => {
                l.norm() > 0.0 && l.norm() < delta * (1.0 + SLACK) && l.arg().abs() < theta0
            }
            Region::Wake { delta, c } => l.norm() < delta * (1.0 + SLACK) && l.re >= -c * l.im * l.im - SLACK * delta,
            Region::Ball { delta } => l.norm() < delta * (1.0 + SLACK),
            Region::Plane => l.re.is_finite() && l.im.is_finite(),
        }
    }
}

/// One parameterized arc, traversed for `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Line {
        from: C64,
        to: C64,
    },
    /// `center + radius e^{iθ}`, θ from `from` to `to`.
    Arc {
        center: C64,
        radius: f64,
        from: f64,
        to: f64,
    },
    /// `λ = σ(a)²` with `σ(a) = ia + c2 a²`.
    SigmaParabola {
        c2: f64,
        from: f64,
        to: f64,
    },
    /// `λ = shift + ia − d a²`.
    LambdaParabola {
        shift: f64,
        d: f64,
        from: f64,
        to: f64,
    },
}

impl Piece {
    /// Point and derivative `(λ(s), λ'(s))`.
    pub fn eval(&self, s: f64) -> (C64, C64) {
        match *self {
            Piece::Line { from, to } => (from + (to - from) * s, to - from),
            Piece::Arc {
                center,
                radius,
                from,
                to,
            } => {
                let th = from + (to - from) * s;
                let e = C64::from_polar(radius, th);
                (center + e, I * e * (to - from))
            }
            Piece::SigmaParabola { c2, from, to } => {
                let a = from + (to - from) * s;
                let sig = C64::new(c2 * a * a, a);
                let dsig = C64::new(2.0 * c2 * a, 1.0);
                (sig * sig, 2.0 * sig * dsig * (to - from))
            }
            Piece::LambdaParabola { shift, d, from, to } => {
                let a = from + (to - from) * s;
                (
                    C64::new(shift - d * a * a, a),
                    C64::new(-2.0 * d * a, 1.0) * (to - from),
                )
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.eval(0.0).0
    }

    pub fn end(&self) -> C64 {
        self.eval(1.0).0
    }

    /// Panel breaks graded geometrically toward the point nearest the origin,
    /// where the model integrands concentrate as t grows.
    fn breaks(&self) -> Vec<f64> {
        const SAMPLES: usize = 512;
        let mut s_min = 0.0;
        let mut r_min = f64::INFINITY;
        let mut r_max: f64 = 0.0;
        for k in 0..=SAMPLES {
            let s = k as f64 / SAMPLES as f64;
            let r = self.eval(s).0.norm();
            if r < r_min {
                r_min = r;
                s_min = s;
            }
            r_max = r_max.max(r);
        }
        let mut b = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        if r_min < 0.1 * r_max {
            b.push(s_min);
            let mut h = 1.0 / 3.0;
            while h > 1e-14 {
                for x in [s_min - h, s_min + h] {
                    if x > 0.0 && x < 1.0 {
                        b.push(x);
                    }
                }
                h /= 3.0;
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    BranchedTangent,
    SectorShrink,
    Parabolic,
    Pointwise,
    FixedVertical,
    /// Vertical rays joined by a semicircle around the origin.
    HeatFull,
    Circle,
}

/// Vertical rays continuing the first piece downward and the last piece
/// upward to `∓i∞`, handled by an asymptotic tail expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    /// Radius of the circle used for Cauchy-formula derivatives.
    pub radius: f64,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    pub pieces: Vec<Piece>,
    pub region: Region,
    pub tails: Option<Tails>,
}

fn push_line(pieces: &mut Vec<Piece>, from: C64, to: C64) {
    if (to - from).norm() > 0.0 {
        pieces.push(Piece::Line { from, to });
    }
}

impl ContourSpec {
    pub fn start(&self) -> C64 {
        self.pieces.first().map(Piece::start).unwrap_or_default()
    }

    pub fn end(&self) -> C64 {
        self.pieces.last().map(Piece::end).unwrap_or_default()
    }

    /// Tangent parabola `σ(a) = ia + c2 a²` in σ = √λ, closed off by segments
    /// to two fixed points on `|λ| = δ`. Independent of t.
    pub fn branched_tangent(p: &ContourParams) -> Self {
        let top = C64::from_polar(p.delta, p.end_angle);
        let par = Piece::SigmaParabola {
            c2: p.c2,
            from: -p.a_star,
            to: p.a_star,
        };
        let mut pieces = Vec::new();
        push_line(&mut pieces, top.conj(), par.start());
        pieces.push(par);
        push_line(&mut pieces, par.end(), top);
        Self {
            kind: ContourKind::BranchedTangent,
            pieces,
            region: Region::FrontBranched {
                delta: p.delta,
                c: p.c_fr3,
            },
            tails: None,
        }
    }

    /// Rays at angle `±(θ₀ − δ̃)` joined by the circle of radius `δ/(1+t)`.
    pub fn sector_shrink(p: &ContourParams, t: f64) -> Self {
        let phi = p.theta0 - p.delta_tilde;
        let r = p.delta / (1.0 + t);
        let pieces = vec![
            Piece::Line {
                from: C64::from_polar(p.delta, -phi),
                to: C64::from_polar(r, -phi),
            },
            Piece::Arc {
                center: C64::new(0.0, 0.0),
                radius: r,
                from: -phi,
                to: phi,
            },
            Piece::Line {
                from: C64::from_polar(r, phi),
                to: C64::from_polar(p.delta, phi),
            },
        ];
        Self {
            kind: ContourKind::SectorShrink,
            pieces,
            region: Region::Sector {
                delta: p.delta,
                theta0: p.theta0,
            },
            tails: None,
        }
    }

    /// Parabola `δ/t + ia − d a²` closed off by segments to the fixed wake
    /// endpoints. Requires the parabola ends to lie in the left half-plane.
    pub fn parabolic(p: &ContourParams, t: f64) -> Result<Self> {
        let shift = p.delta / t;
        if shift >= p.d * p.wake_a_star * p.wake_a_star {
            return Err(ContoursError::Invalid(format!(
                "t = {t} too small: the wake parabola ends must lie left of the imaginary axis"
            )));
        }
        let top = p.wake_endpoint();
        let par = Piece::LambdaParabola {
            shift,
            d: p.d,
            from: -p.wake_a_star,
            to: p.wake_a_star,
        };
        let mut pieces = Vec::new();
        push_line(&mut pieces, top.conj(), par.start());
        pieces.push(par);
        push_line(&mut pieces, par.end(), top);
        Ok(Self {
            kind: ContourKind::Parabolic,
            pieces,
            region: Region::Wake {
                delta: p.delta,
                c: p.c_wt,
            },
            tails: None,
        })
    }

    /// Contour through the real saddle `η_*` of `e^{λt + ν(λ)x}` (clipped to
    /// `±δ₀`), with horizontal connectors at `Im λ = ±δ₁` and segments out to
    /// the wake endpoints.
    pub fn pointwise(p: &ContourParams, model: &WakeModel, x: f64, t: f64) -> Result<Self> {
        if p.delta0 + p.delta2 > 0.1 * p.delta1 * p.delta1 {
            return Err(ContoursError::ContourLeavesBall(format!(
                "δ₀ + δ₂ = {:e} is not small against δ₁² = {:e}",
                p.delta0 + p.delta2,
                p.delta1 * p.delta1
            )));
        }
        if p.delta1 >= p.delta {
            return Err(ContoursError::ContourLeavesBall(format!(
                "δ₁ = {} does not fit in the ball of radius {}",
                p.delta1, p.delta
            )));
        }
        let eta = model.eta_star(x, t, p.delta0);
        let top = p.wake_endpoint();
        let lo = C64::new(-p.delta2, -p.delta1);
        let hi = C64::new(-p.delta2, p.delta1);
        let mut pieces = Vec::new();
        push_line(&mut pieces, top.conj(), lo);
        push_line(&mut pieces, lo, C64::new(eta, -p.delta1));
        push_line(&mut pieces, C64::new(eta, -p.delta1), C64::new(eta, p.delta1));
        push_line(&mut pieces, C64::new(eta, p.delta1), hi);
        push_line(&mut pieces, hi, top);
        let spec = Self {
            kind: ContourKind::Pointwise,
            pieces,
            region: Region::Ball { delta: p.delta },
            tails: None,
        };
        // the outer connectors must stay right of the curve where Re ν = 0
        for piece in [spec.pieces[0], spec.pieces[spec.pieces.len() - 1]] {
            for k in 0..=32 {
                let l = piece.eval(k as f64 / 32.0).0;
                if l.norm() > p.delta * (1.0 + 1e-12) || model.nu(l).re < -1e-15 {
                    return Err(ContoursError::ContourLeavesBall(format!(
                        "point {l} is outside the ball or left of Re ν = 0"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// The line `Re λ = γ`, integrated explicitly for `|Im λ| ≤ lambda_max`
    /// with asymptotic tails beyond.
    pub fn fixed_vertical(gamma: f64, lambda_max: f64) -> Self {
        Self {
            kind: ContourKind::FixedVertical,
            pieces: vec![Piece::Line {
                from: C64::new(gamma, -lambda_max),
                to: C64::new(gamma, lambda_max),
            }],
            region: Region::Plane,
            tails: Some(Tails {
                radius: 0.25 * lambda_max,
                terms: 8,
            }),
        }
    }

    /// Imaginary axis with a right semicircle of radius `r` around the origin.
    pub fn heat_full(r: f64, lambda_max: f64) -> Self {
        Self {
            kind: ContourKind::HeatFull,
            pieces: vec![
                Piece::Line {
                    from: C64::new(0.0, -lambda_max),
                    to: C64::new(0.0, -r),
                },
                Piece::Arc {
                    center: C64::new(0.0, 0.0),
                    radius: r,
                    from: -0.5 * PI,
                    to: 0.5 * PI,
                },
                Piece::Line {
                    from: C64::new(0.0, r),
                    to: C64::new(0.0, lambda_max),
                },
            ],
            region: Region::Plane,
            tails: Some(Tails {
                radius: 0.25 * lambda_max,
                terms: 8,
            }),
        }
    }

    /// Counter-clockwise circle.
    pub fn circle(center: C64, radius: f64) -> Self {
        Self {
            kind: ContourKind::Circle,
            pieces: vec![Piece::Arc {
                center,
                radius,
                from: 0.0,
                to: 2.0 * PI,
            }],
            region: Region::Plane,
            tails: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourIntegral {
    pub value: C64,
    pub error: f64,
    /// Size of the first omitted tail term (zero for finite contours).
    pub tail_bound: f64,
    pub evaluations: usize,
    /// Quadrature nodes falling outside the declared region.
    pub region_violations: usize,
}

/// Tolerances for contour quadrature. The absolute floor defaults to zero so
/// that tiny values are still resolved to relative accuracy.
pub fn contour_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_subdivisions: 20_000,
    }
}

/// Derivatives `g^{(k)}(z)`, `k < n`, by the trapezoid rule on Cauchy's formula.
fn cauchy_derivatives<G: Fn(C64) -> C64>(g: &G, z: C64, radius: f64, n: usize) -> Vec<C64> {
    const M: usize = 96;
    let vals: Vec<C64> = (0..M)
        .map(|j| g(z + C64::from_polar(radius, 2.0 * PI * j as f64 / M as f64)))
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        let mut s = C64::new(0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            s += v * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / M as f64);
        }
        out.push(s * fact / (M as f64 * radius.powi(k as i32)));
    }
    out
}

/// `Σ_k (−1)^k g^{(k)}(z) / t^{k+1}` and its last term, the building block
/// of repeated integration by parts along a vertical ray.
fn tail_series<G: Fn(C64) -> C64>(g: &G, z: C64, t: f64, tails: &Tails) -> (C64, f64) {
    let ders = cauchy_derivatives(g, z, tails.radius, tails.terms);
    let mut s = C64::new(0.0, 0.0);
    let mut last = 0.0;
    for (k, d) in ders.iter().enumerate() {
        let term = d * (if k % 2 == 0 { 1.0 } else { -1.0 }) / t.powi(k as i32 + 1);
        s += term;
        last = term.norm();
    }
    (s, last)
}

/// `∫_Γ e^{λt} g(λ) dλ` along the contour, tails included.
pub fn quadrature_along<G>(spec: &ContourSpec, g: G, t: f64, opts: &QuadOptions) -> Result<ContourIntegral>
where
    G: Fn(C64) -> C64,
{
    // Each piece is integrated separately, so an absolute floor tied to the
    // size of the whole integrand stops tiny pieces from chasing roundoff.
    let mut opts = *opts;
    opts.abs_tol = opts
        .abs_tol
        .max(1e-2 * opts.rel_tol * magnitude(spec, |l| ((l * t).exp() * g(l)).norm()));
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut region_violations = 0;
    for piece in &spec.pieces {
        let breaks = piece.breaks();
        let r = integrate_panels(
            |s: f64| {
                let (l, dl) = piece.eval(s);
                if !spec.region.contains(l) {
                    region_violations += 1;
                }
                (l * t).exp() * g(l) * dl
            },
            &breaks,
            &opts,
        )?;
        value += r.value;
        error += r.error;
        evaluations += r.evaluations;
    }
    let mut tail_bound = 0.0;
    if let Some(tails) = &spec.tails {
        if !(t > 0.0) {
            return Err(ContoursError::Invalid("infinite rays need t > 0".into()));
        }
        let (zb, zt) = (spec.start(), spec.end());
        let (sb, lb) = tail_series(&g, zb, t, tails);
        let (st, lt) = tail_series(&g, zt, t, tails);
        value += (zb * t).exp() * sb - (zt * t).exp() * st;
        tail_bound = ((zb * t).exp().norm() * lb) + ((zt * t).exp().norm() * lt);
        evaluations += 2 * 96;
    }
    Ok(ContourIntegral {
        value,
        error,
        tail_bound,
        evaluations,
        region_violations,
    })
}

/// Rough `∫_Γ h |dλ|` by the midpoint rule on the graded panels.
fn magnitude<H: Fn(C64) -> f64>(spec: &ContourSpec, h: H) -> f64 {
    const SUB: usize = 8;
    let mut m = 0.0;
    for piece in &spec.pieces {
        for w in piece.breaks().windows(2) {
            let ds = (w[1] - w[0]) / SUB as f64;
            for k in 0..SUB {
                let (l, dl) = piece.eval(w[0] + (k as f64 + 0.5) * ds);
                let v = h(l) * dl.norm() * ds;
                if v.is_finite() {
                    m += v;
                }
            }
        }
    }
    m
}

/// `∫_Γ h(λ) |dλ|` for a nonnegative real density.
pub fn arclength_integral<H>(spec: &ContourSpec, h: H, opts: &QuadOptions) -> Result<f64>
where
    H: Fn(C64) -> f64,
{
    let mut opts = *opts;
    opts.abs_tol = opts.abs_tol.max(1e-2 * opts.rel_tol * magnitude(spec, &h));
    let opts = &opts;
    let mut total = 0.0;
    for piece in &spec.pieces {
        let r = integrate_panels(
            |s: f64| {
                let (l, dl) = piece.eval(s);
                C64::new(h(l) * dl.norm(), 0.0)
            },
            &piece.breaks(),
            opts,
        )?;
        total += r.value.re;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// heat kernel

/// `√(π/t) e^{−x²/4t}`.
pub fn heat_kernel(t: f64, x: f64) -> f64 {
    (PI / t).sqrt() * (-x * x / (4.0 * t)).exp()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeatOptions {
    /// Semicircle radius around the branch point.
    pub radius: f64,
    /// Truncation height of the vertical rays.
    pub lambda_max: f64,
}

impl Default for HeatOptions {
    fn default() -> Self {
        Self {
            radius: 1e-4,
            lambda_max: 200.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatReport {
    pub max_rel_error: f64,
    pub worst: (f64, f64),
    pub max_tail_bound: f64,
    pub points: usize,
}

/// The heat kernel as `−i ∫ e^{λt} e^{−√λ|x|}/(2√λ) dλ` along the imaginary
/// axis indented around the origin.
pub fn heat_kernel_by_contour(t: f64, x: f64, opts: &HeatOptions) -> Result<ContourIntegral> {
    if !(t > 0.0) {
        return Err(ContoursError::Invalid(format!("t = {t} must be positive")));
    }
    let spec = ContourSpec::heat_full(opts.radius, opts.lambda_max);
    let ax = x.abs();
    let q = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 20_000,
    };
    let mut r = quadrature_along(
        &spec,
        |l: C64| {
            let s = l.sqrt();
            (-s * ax).exp() / (2.0 * s)
        },
        t,
        &q,
    )?;
    r.value *= -I;
    Ok(r)
}

pub fn verify_heat_kernel_identity(xs: &[f64], ts: &[f64], opts: &HeatOptions) -> Result<HeatReport> {
    let pts: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (t, x))).collect();
    let res: Vec<Result<(f64, f64, f64, f64)>> = pts
        .par_iter()
        .map(|&(t, x)| {
            let r = heat_kernel_by_contour(t, x, opts)?;
            let exact = heat_kernel(t, x);
            let err = (r.value - C64::new(exact, 0.0)).norm() / exact;
            Ok((err, t, x, r.tail_bound))
        })
        .collect();
    let mut report = HeatReport {
        max_rel_error: 0.0,
        worst: (0.0, 0.0),
        max_tail_bound: 0.0,
        points: pts.len(),
    };
    for r in res {
        let (err, t, x, tb) = r?;
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst = (t, x);
        }
        report.max_tail_bound = report.max_tail_bound.max(tb);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// model families and decay rates

/// The wake dispersion model `ν(λ) = ν₁λ − ν₂λ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WakeModel {
    pub nu1: f64,
    pub nu2: f64,
}

impl Default for WakeModel {
    fn default() -> Self {
        Self { nu1: 1.0, nu2: 1.0 }
    }
}

impl WakeModel {
    pub fn nu(&self, l: C64) -> C64 {
        l * self.nu1 - l * l * self.nu2
    }

    /// Real critical point of `λt + ν(λ)x`, for `x ≠ 0`.
    pub fn lambda_min(&self, x: f64, t: f64) -> f64 {
        (t + self.nu1 * x) / (2.0 * self.nu2 * x)
    }

    /// `λ_min` clipped to `[−δ₀, δ₀]`.
    pub fn eta_star(&self, x: f64, t: f64, delta0: f64) -> f64 {
        let l = self.lambda_min(x, t);
        if l.is_nan() {
            -delta0
        } else {
            l.clamp(-delta0, delta0)
        }
    }

    /// The kernel `e^{ν(λ)x}` on `x ≤ 0`, zero for `x > 0`.
    pub fn kernel(&self, l: C64, x: f64) -> C64 {
        if x > 0.0 {
            C64::new(0.0, 0.0)
        } else {
            (self.nu(l) * x).exp()
        }
    }

    /// Standard deviation in x of the moving Gaussian at time t.
    pub fn spread(&self, t: f64) -> f64 {
        (2.0 * self.nu2 * t / self.nu1.powi(3)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFamily {
    /// `u(σ) = u0 + L σ`: Lipschitz at the branch point.
    LipschitzBranched { u0: f64, lipschitz: f64 },
    /// `u(σ) = A σ^{−r}`.
    BlowupBranched { r: f64, amplitude: f64 },
    /// `u(λ) = A λ^r e^{ν(λ)ξ}` measured in the sup norm over `ξ ≤ 0`.
    OutgoingBounded { r: f64, amplitude: f64, model: WakeModel },
    /// `e^{ν(λ)(ξ−ζ)}` on `ξ < ζ`.
    WakeKernel { model: WakeModel },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::LipschitzBranched { .. } => "lipschitz_branched",
            ModelFamily::BlowupBranched { .. } => "blowup_branched",
            ModelFamily::OutgoingBounded { .. } => "outgoing_bounded",
            ModelFamily::WakeKernel { .. } => "wake_kernel",
        }
    }

    /// The algebraic decay exponent the contour argument predicts.
    pub fn predicted_exponent(&self) -> Option<f64> {
        match *self {
            ModelFamily::LipschitzBranched { .. } => Some(-1.5),
            ModelFamily::BlowupBranched { r, .. } => Some(-(1.0 - 0.5 * r)),
            ModelFamily::OutgoingBounded { r, .. } => Some(-(0.5 + 0.5 * r)),
            ModelFamily::WakeKernel { .. } => None,
        }
    }

    /// The t-range on which the asymptotic regime is reached for the default
    /// contour geometry.
    pub fn default_t_range(&self) -> (f64, f64) {
        match self {
            ModelFamily::LipschitzBranched { .. } => (1e5, 1e7),
            ModelFamily::BlowupBranched { .. } => (1e3, 1e5),
            ModelFamily::OutgoingBounded { .. } => (1e4, 1e6),
            ModelFamily::WakeKernel { .. } => (1e10, 1e12),
        }
    }

    fn violated(&self, detail: String) -> ContoursError {
        ContoursError::HypothesisViolated {
            family: self.name().into(),
            detail,
        }
    }

    /// Sample the family's hypotheses at 100 points of its region.
    pub fn check_hypotheses(&self, p: &ContourParams) -> Result<()> {
        let region = self.region(p);
        let samples = region_samples(&region, p.delta, 100);
        match *self {
            ModelFamily::LipschitzBranched { u0, lipschitz } => {
                for l in samples {
                    let s = l.sqrt();
                    let lhs = (self.eval_sigma(s) - C64::new(u0, 0.0)).norm();
                    if lhs > lipschitz * s.norm() * (1.0 + 1e-12) {
                        return Err(self.violated(format!("|u(σ) − u(0)| = {lhs:e} at σ = {s}")));
                    }
                }
            }
            ModelFamily::BlowupBranched { r, amplitude } => {
                if !(0.0..2.0).contains(&r) {
                    return Err(self.violated(format!("r = {r} outside [0, 2)")));
                }
                for l in samples {
                    let s = l.sqrt();
                    if self.eval_sigma(s).norm() > amplitude * s.norm().powf(-r) * (1.0 + 1e-12) {
                        return Err(self.violated(format!("blowup bound fails at σ = {s}")));
                    }
                }
            }
            ModelFamily::OutgoingBounded { r, amplitude, model } => {
                if !(r > -1.0) {
                    return Err(self.violated(format!("r = {r} must exceed −1")));
                }
                for l in samples {
                    for xi in [-1e3, -10.0, -1.0, 0.0] {
                        let v = (model.kernel(l, xi) * l.powf(r) * amplitude).norm();
                        if v > amplitude * l.norm().powf(r) * (1.0 + 1e-12) {
                            return Err(self.violated(format!("|u(λ)(ξ)| exceeds the bound at λ = {l}, ξ = {xi}")));
                        }
                    }
                }
            }
            ModelFamily::WakeKernel { model } => {
                if !(model.nu1 > 0.0 && model.nu2 > 0.0) {
                    return Err(self.violated("ν₁, ν₂ must be positive".into()));
                }
            }
        }
        Ok(())
    }

    fn region(&self, p: &ContourParams) -> Region {
        match self {
            ModelFamily::LipschitzBranched { .. } => Region::FrontBranched {
                delta: p.delta,
                c: p.c_fr3,
            },
            ModelFamily::BlowupBranched { .. } => Region::Sector {
                delta: p.delta,
                theta0: p.theta0,
            },
            _ => Region::Wake {
                delta: p.delta,
                c: p.c_wt,
            },
        }
    }

    /// `u(σ)` for the branched families.
    pub fn eval_sigma(&self, s: C64) -> C64 {
        match *self {
            ModelFamily::LipschitzBranched { u0, lipschitz } => C64::new(u0, 0.0) + s * lipschitz,
            ModelFamily::BlowupBranched { r, amplitude } => s.powf(-r) * amplitude,
            _ => C64::new(f64::NAN, 0.0),
        }
    }

    /// The family's norm of `∫_Γ e^{λt} u dλ` on the proof contour at time t.
    pub fn norm_at(&self, p: &ContourParams, t: f64) -> Result<(f64, usize)> {
        let q = contour_quad_options();
        match *self {
            ModelFamily::LipschitzBranched { .. } => {
                let spec = ContourSpec::branched_tangent(p);
                let r = quadrature_along(&spec, |l: C64| self.eval_sigma(l.sqrt()), t, &q)?;
                Ok((r.value.norm(), r.region_violations))
            }
            ModelFamily::BlowupBranched { .. } => {
                let spec = ContourSpec::sector_shrink(p, t);
                let r = quadrature_along(&spec, |l: C64| self.eval_sigma(l.sqrt()), t, &q)?;
                Ok((r.value.norm(), r.region_violations))
            }
            ModelFamily::OutgoingBounded { r, amplitude, model } => {
                let spec = ContourSpec::parabolic(p, t)?;
                let mut violations = 0;
                let mut at = |xi: f64| -> Result<f64> {
                    let v = quadrature_along(&spec, |l: C64| model.kernel(l, xi) * l.powf(r) * amplitude, t, &q)?;
                    violations += v.region_violations;
                    Ok(v.value.norm())
                };
                let sup = sup_over_xi(&mut at, -t / model.nu1, model.spread(t))?;
                Ok((sup, violations))
            }
            ModelFamily::WakeKernel { .. } => Err(ContoursError::Invalid(
                "the wake kernel is measured pointwise; use verify_pointwise_kernels".into(),
            )),
        }
    }
}

/// Deterministic points of a region: a polar lattice filtered by membership.
fn region_samples(region: &Region, delta: f64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    while out.len() < n && k < 100 * n {
        // golden-ratio angles, log-spaced radii
        let phi = PI * (2.0 * ((k as f64 * 0.618_033_988_749_895) % 1.0) - 1.0);
        let rho = delta * 10f64.powf(-4.0 * ((k as f64 * 0.754_877_666_246_692_7) % 1.0)) * 0.999;
        let l = C64::from_polar(rho, phi);
        if region.contains(l) {
            out.push(l);
        }
        k += 1;
    }
    out
}

/// Sup of `f` over `ξ ≤ 0`, searched around `center` on the scale `spread`.
fn sup_over_xi<F: FnMut(f64) -> Result<f64>>(f: &mut F, center: f64, spread: f64) -> Result<f64> {
    const N: usize = 49;
    let xs: Vec<f64> = (0..N)
        .map(|k| (center + spread * (-6.0 + 12.0 * k as f64 / (N - 1) as f64)).min(0.0))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut vals = Vec::with_capacity(N);
    for (k, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if v > best.0 {
            best = (v, k);
        }
        vals.push(v);
    }
    // golden-section refinement between the neighbours of the best sample
    let (mut a, mut b) = (xs[best.1.saturating_sub(1)], xs[(best.1 + 1).min(N - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best.0.max(fc).max(fd))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRateReport {
    pub family: ModelFamily,
    pub t: Vec<f64>,
    pub norms: Vec<f64>,
    pub fit: DecayFit,
    pub predicted: Option<f64>,
    pub region_violations: usize,
}

/// `n` log-spaced times in `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n)
        .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Evaluate the family's norm along its proof contours on `t_grid` and fit
/// the algebraic decay exponent.
pub fn verify_decay_rate(family: &ModelFamily, p: &ContourParams, t_grid: &[f64]) -> Result<DecayRateReport> {
    p.validate()?;
    family.check_hypotheses(p)?;
    if t_grid.is_empty() {
        return Err(ContoursError::Invalid("empty t grid".into()));
    }
    let res: Vec<Result<(f64, usize)>> = t_grid.par_iter().map(|&t| family.norm_at(p, t)).collect();
    let mut norms = Vec::with_capacity(t_grid.len());
    let mut region_violations = 0;
    for r in res {
        let (n, v) = r?;
        norms.push(n);
        region_violations += v;
    }
    let lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fit = fit_decay(t_grid, &norms, (lo, hi))?;
    Ok(DecayRateReport {
        family: *family,
        t: t_grid.to_vec(),
        norms,
        fit,
        predicted: family.predicted_exponent(),
        region_violations,
    })
}

// ---------------------------------------------------------------------------
// pointwise kernels

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub orders: (u32, u32, u32),
    pub t: Vec<f64>,
    pub l1: Vec<f64>,
    pub linf: Vec<f64>,
    pub l1_fit: DecayFit,
    pub linf_fit: DecayFit,
    pub predicted_l1: f64,
    pub predicted_linf: f64,
    /// `(centroid + t/ν₁)/√t` for each t.
    pub centroid_offset: Vec<f64>,
    /// Standard deviation of the mass over `√t`.
    pub width: Vec<f64>,
    /// Largest `G(edge)/max G` over the spatial windows.
    pub edge_ratio: f64,
}

/// `G^{j,ℓ,m}(t, x) = ∫_Γ |λ|^{j+m} |ν(λ)|^ℓ e^{Re(λt + ν(λ)x)} |dλ|` along the
/// pointwise contour for `(x, t)`; zero for `x > 0`.
pub fn pointwise_kernel(
    model: &WakeModel,
    p: &ContourParams,
    (j, l, m): (u32, u32, u32),
    x: f64,
    t: f64,
) -> Result<f64> {
    if x >= 0.0 {
        return Ok(0.0);
    }
    let spec = ContourSpec::pointwise(p, model, x, t)?;
    let pw = (j + m) as i32;
    let drift = t + model.nu1 * x;
    arclength_integral(
        &spec,
        |lam: C64| {
            let nu = model.nu(lam);
            // Re(λt + ν(λ)x) arranged to avoid cancelling two O(t) terms
            let e = lam.re * drift - model.nu2 * x * (lam.re * lam.re - lam.im * lam.im);
            lam.norm().powi(pw) * nu.norm().powi(l as i32) * e.exp()
        },
        &contour_quad_options(),
    )
}

/// Spatial window `−t/ν₁ ± 10` spreads, with the norms by trapezoid rule.
pub fn verify_pointwise_kernels(
    model: &WakeModel,
    orders: (u32, u32, u32),
    t_grid: &[f64],
    p: &ContourParams,
) -> Result<PointwiseReport> {
    ModelFamily::WakeKernel { model: *model }.check_hypotheses(p)?;
    if t_grid.len() < 2 {
        return Err(ContoursError::Invalid("need at least two times".into()));
    }
    const NX: usize = 241;
    let per_t: Vec<Result<[f64; 5]>> = t_grid
        .par_iter()
        .map(|&t| {
            let c = -t / model.nu1;
            let s = model.spread(t);
            let xs: Vec<f64> = (0..NX)
                .map(|k| (c + s * (-10.0 + 20.0 * k as f64 / (NX - 1) as f64)).min(-f64::MIN_POSITIVE))
                .collect();
            let g = xs
                .iter()
                .map(|&x| pointwise_kernel(model, p, orders, x, t))
                .collect::<Result<Vec<f64>>>()?;
            let mut l1 = 0.0;
            let mut mass = 0.0;
            let mut first = 0.0;
            for k in 1..NX {
                let h = xs[k] - xs[k - 1];
                l1 += 0.5 * h * (g[k] + g[k - 1]);
                mass += 0.5 * h * (g[k] + g[k - 1]);
                first += 0.5 * h * (g[k] * xs[k] + g[k - 1] * xs[k - 1]);
            }
            let linf = g.iter().copied().fold(0.0, f64::max);
            let mean = first / mass;
            let mut second = 0.0;
            for k in 1..NX {
                let h = xs[k] - xs[k - 1];
                second += 0.5 * h * (g[k] * (xs[k] - mean).powi(2) + g[k - 1] * (xs[k - 1] - mean).powi(2));
            }
            let edge = g[0].max(g[NX - 1]) / linf;
            Ok([l1, linf, (mean - c) / t.sqrt(), (second / mass).sqrt() / t.sqrt(), edge])
        })
        .collect();
    let mut l1 = Vec::new();
    let mut linf = Vec::new();
    let mut centroid_offset = Vec::new();
    let mut width = Vec::new();
    let mut edge_ratio: f64 = 0.0;
    for r in per_t {
        let [a, b, c, w, e] = r?;
        l1.push(a);
        linf.push(b);
        centroid_offset.push(c);
        width.push(w);
        edge_ratio = edge_ratio.max(e);
    }
    let lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total = (orders.0 + orders.1 + orders.2) as f64;
    Ok(PointwiseReport {
        orders,
        t: t_grid.to_vec(),
        l1_fit: fit_decay(t_grid, &l1, (lo, hi))?,
        linf_fit: fit_decay(t_grid, &linf, (lo, hi))?,
        l1,
        linf,
        predicted_l1: -0.5 * total,
        predicted_linf: -0.5 * (1.0 + total),
        centroid_offset,
        width,
        edge_ratio,
    })
}

// ---------------------------------------------------------------------------
// odd Green's function

/// `G(σ; ξ, ζ) = σ^{−1}[e^{−ν₁σ|ξ−ζ|} − e^{−ν₁σ|ξ+ζ|}]` and its ξ-derivative.
pub fn odd_kernel(sigma: C64, xi: f64, zeta: f64, nu1: f64) -> (C64, C64) {
    let a = (xi - zeta).abs();
    let b = (xi + zeta).abs();
    let ea = (-sigma * nu1 * a).exp();
    let eb = (-sigma * nu1 * b).exp();
    // σ^{-1}(ea − eb) loses everything to cancellation when |σ|(b − a) is tiny
    let z = sigma * nu1 * (b - a);
    let diff = if z.norm() < 1e-4 {
        ea * nu1 * (b - a) * (C64::new(1.0, 0.0) - z / 2.0 + z * z / 6.0)
    } else {
        (ea - eb) / sigma
    };
    let sa = (xi - zeta).signum() * if xi == zeta { 0.0 } else { 1.0 };
    let sb = (xi + zeta).signum();
    let dxi = -ea * nu1 * sa + eb * nu1 * sb;
    (diff, dxi)
}

/// Ratio of the kernel (and kernel plus derivative) to `⟨ζ⟩e^{−ν₁Re σ|ξ−ζ|}`.
pub fn odd_kernel_ratio(sigma: C64, xi: f64, zeta: f64, nu1: f64) -> (f64, f64) {
    let (g, dg) = odd_kernel(sigma, xi, zeta, nu1);
    let w = (1.0 + zeta * zeta).sqrt() * (-nu1 * sigma.re * (xi - zeta).abs()).exp();
    (g.norm() / w, (g.norm() + dg.norm()) / w)
}

/// Deterministic low-discrepancy samples `(σ, ξ, ζ)` with `|σ| ∈ [1e−3, 1]`,
/// `|arg σ| ≤ 3π/8` and `ξ, ζ ∈ [0, zmax]`. Prefixes nest.
pub fn odd_kernel_samples(n: usize, zmax: f64) -> Vec<(C64, f64, f64)> {
    fn radical_inverse(mut k: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while k > 0 {
            f /= base as f64;
            r += f * (k % base) as f64;
            k /= base;
        }
        r
    }
    (1..=n)
        .map(|k| {
            let mag = 10f64.powf(-3.0 * radical_inverse(k, 2));
            let arg = 0.375 * PI * (2.0 * radical_inverse(k, 3) - 1.0);
            let xi = zmax * radical_inverse(k, 5);
            let zeta = zmax * radical_inverse(k, 7);
            (C64::from_polar(mag, arg), xi, zeta)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OddKernelReport {
    pub max_ratio: f64,
    pub max_ratio_with_derivative: f64,
    pub samples: usize,
    pub finite: bool,
}

pub fn verify_odd_kernel_bound(samples: &[(C64, f64, f64)], nu1: f64) -> OddKernelReport {
    let mut rep = OddKernelReport {
        max_ratio: 0.0,
        max_ratio_with_derivative: 0.0,
        samples: samples.len(),
        finite: true,
    };
    for &(s, xi, zeta) in samples {
        let (r, rd) = odd_kernel_ratio(s, xi, zeta, nu1);
        rep.finite &= r.is_finite() && rd.is_finite();
        rep.max_ratio = rep.max_ratio.max(r);
        rep.max_ratio_with_derivative = rep.max_ratio_with_derivative.max(rd);
    }
    rep
}

// ---------------------------------------------------------------------------
// verification matrix

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRow {
    pub estimate: String,
    pub quantity: String,
    pub fitted: f64,
    pub predicted: f64,
    pub pass: bool,
}

/// Tolerance on fitted exponents.
pub const EXPONENT_TOL: f64 = 0.05;

fn row(estimate: &str, quantity: String, fitted: f64, predicted: f64) -> MatrixRow {
    MatrixRow {
        estimate: estimate.into(),
        quantity,
        fitted,
        predicted,
        pass: (fitted - predicted).abs() <= EXPONENT_TOL,
    }
}

/// Rows for one decay family on its default time range.
pub fn decay_rows(family: &ModelFamily, p: &ContourParams, n_t: usize) -> Result<Vec<MatrixRow>> {
    let (a, b) = family.default_t_range();
    let rep = verify_decay_rate(family, p, &log_grid(a, b, n_t))?;
    let label = match *family {
        ModelFamily::BlowupBranched { r, .. } | ModelFamily::OutgoingBounded { r, .. } => format!("exponent (r = {r})"),
        _ => "exponent".to_string(),
    };
    let mut r = row(
        family.name(),
        label,
        rep.fit.exponent,
        rep.predicted.unwrap_or(f64::NAN),
    );
    r.pass &= rep.region_violations == 0;
    Ok(vec![r])
}

/// Rows for one pointwise kernel order.
pub fn pointwise_rows(
    model: &WakeModel,
    orders: (u32, u32, u32),
    p: &ContourParams,
    n_t: usize,
) -> Result<Vec<MatrixRow>> {
    let (a, b) = ModelFamily::WakeKernel { model: *model }.default_t_range();
    let rep = verify_pointwise_kernels(model, orders, &log_grid(a, b, n_t), p)?;
    let (j, l, m) = orders;
    Ok(vec![
        row(
            "pointwise",
            format!("L1 exponent (j,l,m) = ({j},{l},{m})"),
            rep.l1_fit.exponent,
            rep.predicted_l1,
        ),
        row(
            "pointwise",
            format!("Linf exponent (j,l,m) = ({j},{l},{m})"),
            rep.linf_fit.exponent,
            rep.predicted_linf,
        ),
    ])
}

/// All orders `(j, ℓ, m) ∈ {0,1}³` with `j + ℓ + m ≤ 2`.
pub fn pointwise_orders() -> Vec<(u32, u32, u32)> {
    let mut v = Vec::new();
    for j in 0..2 {
        for l in 0..2 {
            for m in 0..2 {
                if j + l + m <= 2 {
                    v.push((j, l, m));
                }
            }
        }
    }
    v
}

/// Heat-kernel identity on `x ∈ [−5, 5]`, `t ∈ {0.5, 1, 2}`.
pub fn heat_rows() -> Result<Vec<MatrixRow>> {
    let heat = verify_heat_kernel_identity(
        &(0..=20).map(|k| -5.0 + 0.5 * k as f64).collect::<Vec<_>>(),
        &[0.5, 1.0, 2.0],
        &HeatOptions::default(),
    )?;
    Ok(vec![MatrixRow {
        estimate: "heat_identity".into(),
        quantity: "max relative error".into(),
        fitted: heat.max_rel_error,
        predicted: 0.0,
        pass: heat.max_rel_error < 1e-6,
    }])
}

/// Growth of the odd-kernel ratio bound under tenfold sample refinement.
pub fn odd_kernel_rows(nu1: f64) -> Vec<MatrixRow> {
    let coarse = verify_odd_kernel_bound(&odd_kernel_samples(1_000, 50.0), nu1);
    let fine = verify_odd_kernel_bound(&odd_kernel_samples(10_000, 50.0), nu1);
    let growth = fine.max_ratio / coarse.max_ratio;
    vec![MatrixRow {
        estimate: "odd_kernel".into(),
        quantity: "max ratio growth under 10x refinement".into(),
        fitted: growth,
        predicted: 1.0,
        pass: fine.finite && growth < 1.1,
    }]
}

/// The decay families checked by [`verification_matrix`].
pub fn default_families(model: WakeModel) -> [ModelFamily; 6] {
    [
        ModelFamily::LipschitzBranched {
            u0: 1.0,
            lipschitz: 1.0,
        },
        ModelFamily::BlowupBranched { r: 0.5, amplitude: 1.0 },
        ModelFamily::BlowupBranched { r: 1.0, amplitude: 1.0 },
        ModelFamily::BlowupBranched { r: 1.5, amplitude: 1.0 },
        ModelFamily::OutgoingBounded {
            r: 0.0,
            amplitude: 1.0,
            model,
        },
        ModelFamily::OutgoingBounded {
            r: 1.0,
            amplitude: 1.0,
            model,
        },
    ]
}

/// The full set of contour checks: heat identity, the three decay families,
/// the pointwise kernels and the odd-kernel bound.
pub fn verification_matrix(p: &ContourParams) -> Result<Vec<MatrixRow>> {
    verification_matrix_for(p, &WakeModel::default(), 9, 7)
}

/// [`verification_matrix`] for another wake model and fit resolution.
pub fn verification_matrix_for(
    p: &ContourParams,
    model: &WakeModel,
    n_decay: usize,
    n_pointwise: usize,
) -> Result<Vec<MatrixRow>> {
    let mut rows = heat_rows()?;
    for f in &default_families(*model) {
        rows.extend(decay_rows(f, p, n_decay)?);
    }
    for o in pointwise_orders() {
        rows.extend(pointwise_rows(model, o, p, n_pointwise)?);
    }
    rows.extend(odd_kernel_rows(model.nu1));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadOptions {
        contour_quad_options()
    }

    #[test]
    fn residue_of_reciprocal() {
        let c = ContourSpec::circle(C64::new(0.0, 0.0), 0.3);
        let r = quadrature_along(&c, |l: C64| l.inv(), 0.0, &q()).unwrap();
        assert!((r.value - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn entire_function_integrates_to_zero() {
        let c = ContourSpec::circle(C64::new(0.2, -0.1), 1.5);
        let r = quadrature_along(&c, |l: C64| (l * l).sin() + l.powi(3), 1.3, &q()).unwrap();
        assert!(r.value.norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn vertical_line_inverse_laplace() {
        let c = ContourSpec::fixed_vertical(0.5, 200.0);
        let r = quadrature_along(&c, |l: C64| (l + 1.0).inv(), 1.0, &q()).unwrap();
        let f = r.value / (2.0 * PI * I);
        assert!(
            (f - C64::new((-1f64).exp(), 0.0)).norm() < 1e-8,
            "{f}, tail {}",
            r.tail_bound
        );
    }

    #[test]
    fn heat_kernel_point_values() {
        let o = HeatOptions::default();
        let a = heat_kernel_by_contour(1.0, 0.0, &o).unwrap().value;
        assert!((a - C64::new(PI.sqrt(), 0.0)).norm() < 1e-8, "{a}");
        let b = heat_kernel_by_contour(1.0, 2.0, &o).unwrap().value;
        assert!((b - C64::new(PI.sqrt() * (-1f64).exp(), 0.0)).norm() < 1e-8, "{b}");
    }

    #[test]
    fn heat_identity_on_grid() {
        let xs: Vec<f64> = (0..=20).map(|k| -5.0 + 0.5 * k as f64).collect();
        let rep = verify_heat_kernel_identity(&xs, &[0.5, 1.0, 2.0], &HeatOptions::default()).unwrap();
        assert!(rep.max_rel_error < 1e-6, "{rep:?}");
    }

    #[test]
    fn path_independence() {
        // shared endpoints, different routes through the left half-plane
        let p = ContourParams::default();
        let t = 50.0;
        let a = ContourSpec::parabolic(&p, t).unwrap();
        let (s, e) = (a.start(), a.end());
        let mut pieces = Vec::new();
        push_line(&mut pieces, s, C64::new(0.05, -0.02));
        push_line(&mut pieces, C64::new(0.05, -0.02), C64::new(0.05, 0.02));
        push_line(&mut pieces, C64::new(0.05, 0.02), e);
        let b = ContourSpec {
            kind: ContourKind::FixedVertical,
            pieces,
            region: Region::Plane,
            tails: None,
        };
        let g = |l: C64| (l + 1.0).inv() * (l * 3.0).cos();
        let va = quadrature_along(&a, g, t, &q()).unwrap().value;
        let vb = quadrature_along(&b, g, t, &q()).unwrap().value;
        assert!((va - vb).norm() < 1e-8 * va.norm().max(1e-3), "{va} vs {vb}");
    }

    #[test]
    fn contours_stay_in_their_regions() {
        let p = ContourParams::default();
        let specs = [
            ContourSpec::branched_tangent(&p),
            ContourSpec::sector_shrink(&p, 10.0),
            ContourSpec::sector_shrink(&p, 1e5),
            ContourSpec::parabolic(&p, 1e3).unwrap(),
            ContourSpec::parabolic(&p, 1e6).unwrap(),
        ];
        for s in &specs {
            let r = quadrature_along(s, |_| C64::new(1.0, 0.0), 1.0, &q()).unwrap();
            assert_eq!(r.region_violations, 0, "{:?}", s.kind);
        }
    }

    #[test]
    fn region_inequalities() {
        let fr = Region::FrontBranched { delta: 0.1, c: 1.0 };
        assert!(fr.contains(C64::new(-0.001, 0.05)));
        assert!(!fr.contains(C64::new(-0.01, 0.0)));
        let wt = Region::Wake { delta: 0.1, c: 0.75 };
        assert!(wt.contains(C64::new(-0.001, 0.05)));
        assert!(!wt.contains(C64::new(-0.003, 0.05)));
        let sec = Region::Sector {
            delta: 0.1,
            theta0: 0.75 * PI,
        };
        assert!(sec.contains(C64::from_polar(0.05, 0.7 * PI)));
        assert!(!sec.contains(C64::from_polar(0.05, 0.8 * PI)));
    }

    #[test]
    fn sector_rays_default_point_left() {
        let mut p = ContourParams::default();
        assert!(p.validate().is_ok());
        p.theta0 = PI / 3.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn lipschitz_family_decays_at_three_halves() {
        let f = ModelFamily::LipschitzBranched {
            u0: 0.0,
            lipschitz: 1.0,
        };
        let rep = verify_decay_rate(&f, &ContourParams::default(), &log_grid(1e5, 1e7, 7)).unwrap();
        assert!((rep.fit.exponent + 1.5).abs() < 0.05, "{:?}", rep.fit);
        assert_eq!(rep.region_violations, 0);
    }

    #[test]
    fn blowup_family_matches_hankel_closed_form() {
        // the sector integral of e^{λt} λ^{-r/2} is 2πi t^{r/2-1}/Γ(r/2) up to
        // exponentially small endpoint terms; for r = 1, Γ(1/2) = √π
        let f = ModelFamily::BlowupBranched { r: 1.0, amplitude: 1.0 };
        let p = ContourParams::default();
        for t in [1e3, 1e4] {
            let (n, _) = f.norm_at(&p, t).unwrap();
            let exact = 2.0 * PI * t.powf(-0.5) / PI.sqrt();
            assert!((n - exact).abs() < 1e-9 * exact, "{n} vs {exact}");
        }
        let rep = verify_decay_rate(
            &ModelFamily::BlowupBranched { r: 0.5, amplitude: 1.0 },
            &p,
            &log_grid(1e3, 1e5, 7),
        )
        .unwrap();
        assert!((rep.fit.exponent + 0.75).abs() < 0.05, "{:?}", rep.fit);
    }

    #[test]
    fn outgoing_family_matches_gaussian_closed_form() {
        // for r = 0 the λ-integral is the Gaussian integral
        // i √(π/(ν₂|x|)) exp(−(t + ν₁x)²/(4ν₂|x|))
        let model = WakeModel::default();
        let p = ContourParams::default();
        let t = 1e4;
        let spec = ContourSpec::parabolic(&p, t).unwrap();
        for x in [-t - 50.0, -t, -t + 120.0] {
            let v = quadrature_along(&spec, |l: C64| model.kernel(l, x), t, &q())
                .unwrap()
                .value;
            let ax = x.abs();
            let exact = (PI / (model.nu2 * ax)).sqrt() * (-(t + model.nu1 * x).powi(2) / (4.0 * model.nu2 * ax)).exp();
            assert!((v - C64::new(0.0, exact)).norm() < 1e-9 * exact, "{v} vs {exact}");
        }
        let f = ModelFamily::OutgoingBounded {
            r: 0.0,
            amplitude: 1.0,
            model,
        };
        let rep = verify_decay_rate(&f, &p, &log_grid(1e4, 1e6, 5)).unwrap();
        assert!((rep.fit.exponent + 0.5).abs() < 0.05, "{:?}", rep.fit);
    }

    #[test]
    fn decay_exponent_ignores_amplitude() {
        let p = ContourParams::default();
        let ts = log_grid(1e3, 1e5, 5);
        let a = verify_decay_rate(&ModelFamily::BlowupBranched { r: 0.5, amplitude: 1.0 }, &p, &ts).unwrap();
        let b = verify_decay_rate(&ModelFamily::BlowupBranched { r: 0.5, amplitude: 2.0 }, &p, &ts).unwrap();
        assert!((a.fit.exponent - b.fit.exponent).abs() < 1e-9);
        assert!((b.fit.prefactor / a.fit.prefactor - 2.0).abs() < 1e-9);
    }

    #[test]
    fn violated_hypothesis_is_reported() {
        // a wake boundary curve left of Re ν = 0 lets e^{ν(λ)ξ} grow for ξ < 0
        let p = ContourParams {
            c_wt: 3.0,
            d: 0.5,
            ..ContourParams::default()
        };
        let f = ModelFamily::OutgoingBounded {
            r: 0.0,
            amplitude: 1.0,
            model: WakeModel::default(),
        };
        assert!(matches!(
            verify_decay_rate(&f, &p, &[1e4, 1e5]),
            Err(ContoursError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn pointwise_kernel_matches_gaussian_profile() {
        // on the saddle segment the integrand is e^{E(η*)} e^{−ν₂|x|y²}
        let model = WakeModel::default();
        let p = ContourParams::default();
        let t = 1e10;
        for off in [0.0, 1e5, -2e5] {
            let x = -t + off;
            let g = pointwise_kernel(&model, &p, (0, 0, 0), x, t).unwrap();
            let ax = x.abs();
            let eta = model.eta_star(x, t, p.delta0);
            let e = eta * (t + model.nu1 * x) + model.nu2 * ax * eta * eta;
            let exact = e.exp() * (PI / (model.nu2 * ax)).sqrt();
            assert!((g - exact).abs() < 1e-8 * exact, "{g} vs {exact}");
        }
        assert_eq!(pointwise_kernel(&model, &p, (0, 0, 0), 3.0, t).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_lowest_order_rates_and_envelope() {
        let model = WakeModel::default();
        let rep =
            verify_pointwise_kernels(&model, (0, 0, 0), &log_grid(1e10, 1e12, 5), &ContourParams::default()).unwrap();
        assert!(rep.l1_fit.exponent.abs() < 0.05, "{:?}", rep.l1_fit);
        assert!((rep.linf_fit.exponent + 0.5).abs() < 0.05, "{:?}", rep.linf_fit);
        for (c, w) in rep.centroid_offset.iter().zip(&rep.width) {
            assert!(c.abs() < 0.1 && *w > 0.5 && *w < 3.0, "centroid {c}, width {w}");
        }
        assert!(rep.edge_ratio < 1e-12);
    }

    #[test]
    fn pointwise_nu_order_rate() {
        let rep = verify_pointwise_kernels(
            &WakeModel::default(),
            (0, 1, 0),
            &log_grid(1e10, 1e12, 5),
            &ContourParams::default(),
        )
        .unwrap();
        assert!((rep.l1_fit.exponent + 0.5).abs() < 0.05, "{:?}", rep.l1_fit);
    }

    #[test]
    fn crowded_connectors_are_rejected() {
        let p = ContourParams {
            delta0: 1e-3,
            ..ContourParams::default()
        };
        assert!(matches!(
            ContourSpec::pointwise(&p, &WakeModel::default(), -10.0, 10.0),
            Err(ContoursError::ContourLeavesBall(_))
        ));
    }

    #[test]
    fn odd_kernel_vanishes_at_the_wall() {
        let (g, _) = odd_kernel(C64::new(0.3, 0.2), 0.0, 4.0, 1.0);
        assert_eq!(g, C64::new(0.0, 0.0));
    }

    #[test]
    fn odd_kernel_diagonal_bound() {
        let nu1 = 1.3;
        for zeta in [0.1, 1.0, 10.0] {
            for s in [1e-4, 1e-3, 1e-2] {
                let (g, _) = odd_kernel(C64::new(s, 0.0), zeta, zeta, nu1);
                let exact = (1.0 - (-2.0 * nu1 * s * zeta).exp()) / s;
                assert!((g.re - exact).abs() < 1e-10 * exact);
                let (r, _) = odd_kernel_ratio(C64::new(s, 0.0), zeta, zeta, nu1);
                assert!(r <= 2.0 * nu1);
            }
        }
    }

    #[test]
    fn odd_kernel_ratio_stable_under_refinement() {
        let a = verify_odd_kernel_bound(&odd_kernel_samples(1_000, 50.0), 1.0);
        let b = verify_odd_kernel_bound(&odd_kernel_samples(10_000, 50.0), 1.0);
        assert!(a.finite && b.finite);
        assert!(b.max_ratio < 1.1 * a.max_ratio, "{a:?} {b:?}");
        // |∂ξ G| ≤ 2ν₁ e^{−ν₁ Re σ|ξ−ζ|}, so the derivative adds at most 2ν₁
        assert!(b.max_ratio_with_derivative <= b.max_ratio + 2.0);
    }
}
