//! Direct simulation of the FitzHugh–Nagumo system in a frame moving with
//! speed `c`:
//!
//! ```text
//! u_t = u_xixi + c u_xi + f(u) - w
//! w_t =          c w_xi + eps (u - gamma w)
//! ```
//!
//! `c = 0` is the lab frame. Space is discretised on a vertex-centred grid with
//! second-order central diffusion and third-order upwind-biased advection; time
//! stepping is the IMEX Runge–Kutta scheme ARS(2,2,2) with diffusion implicit.
//!
//! # FHN1 binary layout
//!
//! All numbers little-endian.
//!
//! | bytes          | content                                   |
//! |----------------|-------------------------------------------|
//! | 4              | magic `FHN1`                              |
//! | 8, 8, 8        | `u64` counts: times, points, components=2 |
//! | 8, 8           | `f64` `x0`, `dx`                          |
//! | 8 * times      | `f64` output times                        |
//! | 8 * t * x * 2  | `f64` fields, row-major `[time][x][component]` |

use std::io::{self, Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_tridiagonal;
use crate::model::ModelParams;

pub const CSV_HEADER: &str = "# fhn-lab csv v1";
const FHN1_MAGIC: &[u8; 4] = b"FHN1";

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("instability at t = {t}: |field| reached {max:e}")]
    Instability { t: f64, max: f64 },
    #[error("front reached the sponge at t = {t} (position {position})")]
    DomainExhausted { t: f64, position: f64 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("no wake: {0}")]
    NoWake(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Zero flux.
    Neumann,
    /// Both components pinned to the rest state 0.
    DirichletRest,
}

/// Multiplicative damping `exp(-dt s(xi))` toward the rest state on the last
/// `width` units before the right boundary, with
/// `s` a Gaussian ramp `exp(-(xi - x1)^2 / (width/2)^2)` shifted to vanish at
/// the inner edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    /// Number of cells; there are `n + 1` points.
    pub n: usize,
    pub dx: f64,
    pub left: Boundary,
    pub right: Boundary,
    pub sponge: Option<Sponge>,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self, SimulateError> {
        if !(x1 > x0) || n < 4 {
            return Err(SimulateError::Invalid(format!("grid [{x0}, {x1}] with {n} cells")));
        }
        Ok(Self {
            x0,
            x1,
            n,
            dx: (x1 - x0) / n as f64,
            left: Boundary::Neumann,
            right: Boundary::Neumann,
            sponge: None,
        })
    }

    pub fn with_sponge(mut self, width: f64, strength: f64) -> Result<Self, SimulateError> {
        if !(width > 0.0) || width >= 0.5 * (self.x1 - self.x0) || !(strength >= 0.0) {
            return Err(SimulateError::Invalid(format!(
                "sponge width {width}, strength {strength}"
            )));
        }
        self.sponge = Some(Sponge { width, strength });
        Ok(self)
    }

    pub fn points(&self) -> usize {
        self.n + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points()).map(|j| self.x(j)).collect()
    }

    /// Inner edge of the sponge, or the right boundary.
    pub fn sponge_start(&self) -> f64 {
        self.sponge.map_or(self.x1, |s| self.x1 - s.width)
    }

    fn sponge_rate(&self, x: f64) -> f64 {
        let Some(s) = self.sponge else { return 0.0 };
        let start = self.x1 - s.width;
        if x <= start {
            return 0.0;
        }
        let sig = 0.5 * s.width;
        let floor = (-4.0f64).exp();
        s.strength * (((-(x - self.x1).powi(2) / (sig * sig)).exp() - floor) / (1.0 - floor)).max(0.0)
    }
}

/// Term switches, used by the scheme tests to isolate diffusion or advection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub diffusion: bool,
    pub advection: bool,
    pub reaction: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            diffusion: true,
            advection: true,
            reaction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fields {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Fields {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.w).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.w).all(|v| v.is_finite())
    }
}

/// Initial perturbation of the rest state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Seed {
    /// Independent uniform samples in `[-amplitude, amplitude]` for both
    /// components at every point.
    WhiteNoise { amplitude: f64, rng_seed: u64 },
    /// `u = amplitude exp(-((x - center)/width)^2)`, `w = 0`.
    Localized { amplitude: f64, width: f64, center: f64 },
    /// A stored state plus a localized bump in `u`.
    FrontSnapshot {
        fields: Fields,
        amplitude: f64,
        width: f64,
        center: f64,
    },
}

impl Seed {
    pub fn describe(&self) -> String {
        match self {
            Self::WhiteNoise { amplitude, rng_seed } => {
                format!("white_noise(amplitude={amplitude}, rng_seed={rng_seed})")
            }
            Self::Localized {
                amplitude,
                width,
                center,
            } => {
                format!("localized(amplitude={amplitude}, width={width}, center={center})")
            }
            Self::FrontSnapshot {
                amplitude,
                width,
                center,
                ..
            } => {
                format!("front_snapshot(amplitude={amplitude}, width={width}, center={center})")
            }
        }
    }

    pub fn realize(&self, grid: &Grid) -> Result<Fields, SimulateError> {
        let np = grid.points();
        let bump = |f: &mut Fields, amplitude: f64, width: f64, center: f64| {
            if !(width > 0.0) {
                return Err(SimulateError::Invalid(format!("seed width {width}")));
            }
            for (j, u) in f.u.iter_mut().enumerate() {
                let z = (grid.x(j) - center) / width;
                *u += amplitude * (-z * z).exp();
            }
            Ok(())
        };
        let mut f = Fields::zeros(np);
        match self {
            Self::WhiteNoise { amplitude, rng_seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*rng_seed);
                for j in 0..np {
                    f.u[j] = amplitude * rng.random_range(-1.0..=1.0);
                    f.w[j] = amplitude * rng.random_range(-1.0..=1.0);
                }
            }
            Self::Localized {
                amplitude,
                width,
                center,
            } => bump(&mut f, *amplitude, *width, *center)?,
            Self::FrontSnapshot {
                fields,
                amplitude,
                width,
                center,
            } => {
                if fields.len() != np || fields.w.len() != np {
                    return Err(SimulateError::Invalid(format!(
                        "snapshot has {} points, grid has {np}",
                        fields.len()
                    )));
                }
                f = fields.clone();
                if *amplitude != 0.0 {
                    bump(&mut f, *amplitude, *width, *center)?;
                }
            }
        }
        Ok(f)
    }
}

/// ARS(2,2,2) coefficients.
const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const DELTA: f64 = 1.0 - 1.0 / (2.0 * GAMMA);

/// Time stepper holding the factorised implicit operator.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub grid: Grid,
    pub params: ModelParams<f64>,
    pub frame_speed: f64,
    pub dt: f64,
    pub physics: Physics,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    damping: Vec<f64>,
    scratch: Vec<f64>,
    ku: [Vec<f64>; 2],
    kw: [Vec<f64>; 2],
    iu: Vec<f64>,
    stage: Fields,
    ext: Vec<f64>,
}

impl Stepper {
    pub fn new(
        grid: Grid,
        params: ModelParams<f64>,
        frame_speed: f64,
        dt: f64,
        physics: Physics,
    ) -> Result<Self, SimulateError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimulateError::Invalid(format!("dt = {dt}")));
        }
        let np = grid.points();
        let r = if physics.diffusion {
            GAMMA * dt / (grid.dx * grid.dx)
        } else {
            0.0
        };
        let mut lower = vec![-r; np];
        let mut diag = vec![1.0 + 2.0 * r; np];
        let mut upper = vec![-r; np];
        match grid.left {
            Boundary::Neumann => upper[0] = -2.0 * r,
            Boundary::DirichletRest => {
                diag[0] = 1.0;
                upper[0] = 0.0;
            }
        }
        match grid.right {
            Boundary::Neumann => lower[np - 1] = -2.0 * r,
            Boundary::DirichletRest => {
                diag[np - 1] = 1.0;
                lower[np - 1] = 0.0;
            }
        }
        let damping = (0..np).map(|j| (-dt * grid.sponge_rate(grid.x(j))).exp()).collect();
        Ok(Self {
            lower,
            diag,
            upper,
            damping,
            scratch: vec![0.0; np],
            ku: [vec![0.0; np], vec![0.0; np]],
            kw: [vec![0.0; np], vec![0.0; np]],
            iu: vec![0.0; np],
            stage: Fields::zeros(np),
            ext: vec![0.0; np + 4],
            grid,
            params,
            frame_speed,
            dt,
            physics,
        })
    }

    /// Default step: `0.25 dx^2`, capped by an advective CFL number of 0.5.
    pub fn default_dt(grid: &Grid, frame_speed: f64) -> f64 {
        let mut dt = 0.25 * grid.dx * grid.dx;
        if frame_speed != 0.0 {
            dt = dt.min(0.5 * grid.dx / frame_speed.abs());
        }
        dt
    }

    pub fn cfl(&self) -> f64 {
        self.frame_speed.abs() * self.dt / self.grid.dx
    }

    pub fn diffusion_number(&self) -> f64 {
        self.dt / (self.grid.dx * self.grid.dx)
    }

    /// `c v_xi` by third-order upwind-biased differences, ghost values from
    /// the boundary conditions.
    fn advect(&mut self, v: &[f64], out: &mut [f64]) {
        let c = self.frame_speed;
        let np = v.len();
        if !self.physics.advection || c == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let e = &mut self.ext;
        e[2..np + 2].copy_from_slice(v);
        let sl = if self.grid.left == Boundary::Neumann { 1.0 } else { -1.0 };
        let sr = if self.grid.right == Boundary::Neumann {
            1.0
        } else {
            -1.0
        };
        e[1] = sl * v[1];
        e[0] = sl * v[2];
        e[np + 2] = sr * v[np - 2];
        e[np + 3] = sr * v[np - 3];
        let s = c / (6.0 * self.grid.dx);
        if c > 0.0 {
            for j in 0..np {
                let k = j + 2;
                out[j] = s * (-2.0 * e[k - 1] - 3.0 * e[k] + 6.0 * e[k + 1] - e[k + 2]);
            }
        } else {
            for j in 0..np {
                let k = j + 2;
                out[j] = s * (e[k - 2] - 6.0 * e[k - 1] + 3.0 * e[k] + 2.0 * e[k + 1]);
            }
        }
    }

    /// Explicit tendencies (advection and reaction) of `f` into slot `slot`.
    fn explicit(&mut self, f: &Fields, slot: usize) {
        let mut ku = std::mem::take(&mut self.ku[slot]);
        let mut kw = std::mem::take(&mut self.kw[slot]);
        self.advect(&f.u, &mut ku);
        self.advect(&f.w, &mut kw);
        if self.physics.reaction {
            let p = &self.params;
            for j in 0..f.len() {
                ku[j] += p.cubic(f.u[j]) - f.w[j];
                kw[j] += p.epsilon * (f.u[j] - p.gamma * f.w[j]);
            }
        }
        for bc in [(self.grid.left, 0usize), (self.grid.right, f.len() - 1)] {
            if bc.0 == Boundary::DirichletRest {
                ku[bc.1] = 0.0;
                kw[bc.1] = 0.0;
            }
        }
        self.ku[slot] = ku;
        self.kw[slot] = kw;
    }

    fn implicit_solve(&mut self, rhs: &mut [f64]) {
        let np = rhs.len();
        if self.grid.left == Boundary::DirichletRest {
            rhs[0] = 0.0;
        }
        if self.grid.right == Boundary::DirichletRest {
            rhs[np - 1] = 0.0;
        }
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, rhs, &mut self.scratch);
    }

    /// Advance `f` by one step of size `dt`.
    pub fn step(&mut self, f: &mut Fields) {
        let dt = self.dt;
        let np = f.len();
        // stage 1
        self.explicit(f, 0);
        let mut st = std::mem::replace(&mut self.stage, Fields::zeros(0));
        for j in 0..np {
            st.u[j] = f.u[j] + dt * GAMMA * self.ku[0][j];
            st.w[j] = f.w[j] + dt * GAMMA * self.kw[0][j];
        }
        let rhs1 = st.u.clone();
        self.implicit_solve(&mut st.u);
        // implicit tendency of stage 1 recovered from the solve
        for j in 0..np {
            self.iu[j] = (st.u[j] - rhs1[j]) / (dt * GAMMA);
        }
        // stage 2
        self.explicit(&st, 1);
        for j in 0..np {
            f.u[j] += dt * (DELTA * self.ku[0][j] + (1.0 - DELTA) * self.ku[1][j] + (1.0 - GAMMA) * self.iu[j]);
            f.w[j] += dt * (DELTA * self.kw[0][j] + (1.0 - DELTA) * self.kw[1][j]);
        }
        self.implicit_solve(&mut f.u);
        if self.grid.sponge.is_some() {
            for j in 0..np {
                f.u[j] *= self.damping[j];
                f.w[j] *= self.damping[j];
            }
        }
        self.stage = st;
    }
}

/// One step from a fresh stepper with default physics.
pub fn step(state: &Fields, dt: f64, p: &ModelParams<f64>, c: f64, grid: &Grid) -> Result<Fields, SimulateError> {
    let mut s = Stepper::new(grid.clone(), *p, c, dt, Physics::default())?;
    let mut f = state.clone();
    if f.len() != grid.points() {
        return Err(SimulateError::Invalid("state does not match grid".into()));
    }
    s.step(&mut f);
    if !f.is_finite() || f.max_abs() > MAX_ABS {
        return Err(SimulateError::Instability {
            t: dt,
            max: f.max_abs(),
        });
    }
    Ok(f)
}

const MAX_ABS: f64 = 1e3;

/// Rightmost crossing of `u = level`, linearly interpolated.
pub fn front_position(grid: &Grid, u: &[f64], level: f64) -> Option<f64> {
    for j in (0..u.len() - 1).rev() {
        let a = u[j] - level;
        let b = u[j + 1] - level;
        if a == 0.0 {
            return Some(grid.x(j));
        }
        if a * b < 0.0 {
            return Some(grid.x(j) + grid.dx * a / (a - b));
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams<f64>,
    pub grid: Grid,
    pub frame_speed: f64,
    /// `None` uses [`Stepper::default_dt`].
    pub dt: Option<f64>,
    pub t_end: f64,
    pub output_interval: f64,
    pub track_interval: f64,
    pub seed: Seed,
    /// Front level; `None` means `a / 2`.
    pub level: Option<f64>,
    pub physics: Physics,
    /// Stop with `DomainExhausted` once the front is this close to the sponge.
    pub sponge_margin: f64,
}

impl SimConfig {
    pub fn new(params: ModelParams<f64>, grid: Grid, frame_speed: f64, t_end: f64, seed: Seed) -> Self {
        Self {
            params,
            grid,
            frame_speed,
            dt: None,
            t_end,
            output_interval: 10.0,
            track_interval: 1.0,
            seed,
            level: None,
            physics: Physics::default(),
            sponge_margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRun {
    pub grid: Grid,
    pub params: ModelParams<f64>,
    pub frame_speed: f64,
    pub dt: f64,
    pub steps: usize,
    pub cfl: f64,
    pub diffusion_number: f64,
    pub seed: String,
    pub times: Vec<f64>,
    pub fields: Vec<Fields>,
    /// `(t, position)` of the front, one entry per track instant with a crossing.
    pub front_track: Vec<(f64, f64)>,
    /// `(t, sup |u|, L2 norm of u)`.
    pub norms: Vec<(f64, f64, f64)>,
}

impl SimulationRun {
    pub fn last(&self) -> Option<&Fields> {
        self.fields.last()
    }

    /// Output snapshot nearest to `t`.
    pub fn at(&self, t: f64) -> Option<(f64, &Fields)> {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some((self.times[i], &self.fields[i]))
    }

    pub fn front_track_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\nt,position\n");
        for (t, x) in &self.front_track {
            s.push_str(&format!("{t},{x}\n"));
        }
        s
    }

    pub fn norms_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\nt,linf_u,l2_u\n");
        for (t, a, b) in &self.norms {
            s.push_str(&format!("{t},{a},{b}\n"));
        }
        s
    }

    /// Snapshot at output index `i` as CSV.
    pub fn snapshot_csv(&self, i: usize) -> String {
        let f = &self.fields[i];
        let mut s = format!("{CSV_HEADER}\n# t = {}\nx,u,w\n", self.times[i]);
        for j in 0..f.len() {
            s.push_str(&format!("{},{},{}\n", self.grid.x(j), f.u[j], f.w[j]));
        }
        s
    }

    pub fn write_fhn1<W: Write>(&self, mut out: W) -> io::Result<()> {
        write_fhn1(&mut out, self.grid.x0, self.grid.dx, &self.times, &self.fields)
    }
}

pub fn write_fhn1<W: Write>(out: &mut W, x0: f64, dx: f64, times: &[f64], fields: &[Fields]) -> io::Result<()> {
    let nx = fields.first().map_or(0, |f| f.len());
    out.write_all(FHN1_MAGIC)?;
    for v in [times.len() as u64, nx as u64, 2u64] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&x0.to_le_bytes())?;
    out.write_all(&dx.to_le_bytes())?;
    for t in times {
        out.write_all(&t.to_le_bytes())?;
    }
    for f in fields {
        for j in 0..nx {
            out.write_all(&f.u[j].to_le_bytes())?;
            out.write_all(&f.w[j].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Contents of an FHN1 file: `(x0, dx, times, fields)`.
pub fn read_fhn1<R: Read>(mut inp: R) -> io::Result<(f64, f64, Vec<f64>, Vec<Fields>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != FHN1_MAGIC {
        return Err(bad("missing FHN1 magic"));
    }
    let mut b8 = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> io::Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nt = next_u64(&mut inp)? as usize;
    let nx = next_u64(&mut inp)? as usize;
    if next_u64(&mut inp)? != 2 {
        return Err(bad("expected two components"));
    }
    let next_f64 = |r: &mut R| -> io::Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let x0 = next_f64(&mut inp)?;
    let dx = next_f64(&mut inp)?;
    let times = (0..nt).map(|_| next_f64(&mut inp)).collect::<io::Result<Vec<_>>>()?;
    let mut fields = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut f = Fields::zeros(nx);
        for j in 0..nx {
            f.u[j] = next_f64(&mut inp)?;
            f.w[j] = next_f64(&mut inp)?;
        }
        fields.push(f);
    }
    Ok((x0, dx, times, fields))
}

/// Time integration with periodic output, front tracking and norm recording.
pub struct Simulation {
    pub stepper: Stepper,
    pub state: Fields,
    pub t: f64,
    pub steps: usize,
    level: f64,
    sponge_margin: f64,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self, SimulateError> {
        let grid = config.grid.clone();
        let dt = config
            .dt
            .unwrap_or_else(|| Stepper::default_dt(&grid, config.frame_speed));
        // land exactly on the tracking instants
        let base = config.track_interval.min(config.output_interval);
        if !(base > 0.0) {
            return Err(SimulateError::Invalid(
                "output and track intervals must be positive".into(),
            ));
        }
        let dt = base / (base / dt).ceil();
        let state = config.seed.realize(&grid)?;
        let stepper = Stepper::new(grid, config.params, config.frame_speed, dt, config.physics)?;
        Ok(Self {
            stepper,
            state,
            t: 0.0,
            steps: 0,
            level: config.level.unwrap_or(0.5 * config.params.a),
            sponge_margin: config.sponge_margin,
        })
    }

    pub fn front(&self) -> Option<f64> {
        front_position(&self.stepper.grid, &self.state.u, self.level)
    }

    /// Step until `t_target` (rounded to the step grid).
    pub fn advance_to(&mut self, t_target: f64) -> Result<(), SimulateError> {
        let dt = self.stepper.dt;
        let n = ((t_target - self.t) / dt).round().max(0.0) as usize;
        for _ in 0..n {
            self.stepper.step(&mut self.state);
            self.steps += 1;
        }
        self.t = if n > 0 { t_target } else { self.t };
        let m = self.state.max_abs();
        if !m.is_finite() || m > MAX_ABS {
            return Err(SimulateError::Instability { t: self.t, max: m });
        }
        Ok(())
    }

    fn check_front(&self) -> Result<Option<f64>, SimulateError> {
        let pos = self.front();
        if let (Some(x), Some(_)) = (pos, self.stepper.grid.sponge) {
            if x > self.stepper.grid.sponge_start() - self.sponge_margin {
                return Err(SimulateError::DomainExhausted { t: self.t, position: x });
            }
        }
        Ok(pos)
    }
}

/// Integrate an invasion experiment to `t_end`.
pub fn run_invasion(config: &SimConfig) -> Result<SimulationRun, SimulateError> {
    if !(config.t_end >= 0.0) {
        return Err(SimulateError::Invalid(format!("t_end = {}", config.t_end)));
    }
    let mut sim = Simulation::new(config)?;
    let grid = sim.stepper.grid.clone();
    let mut run = SimulationRun {
        grid: grid.clone(),
        params: config.params,
        frame_speed: config.frame_speed,
        dt: sim.stepper.dt,
        steps: 0,
        cfl: sim.stepper.cfl(),
        diffusion_number: sim.stepper.diffusion_number(),
        seed: config.seed.describe(),
        times: Vec::new(),
        fields: Vec::new(),
        front_track: Vec::new(),
        norms: Vec::new(),
    };
    let n_track = (config.t_end / config.track_interval).round() as usize;
    let out_every = ((config.output_interval / config.track_interval).round() as usize).max(1);
    let record = |sim: &Simulation, run: &mut SimulationRun, pos: Option<f64>, output: bool| {
        if let Some(x) = pos {
            run.front_track.push((sim.t, x));
        }
        let linf = sim.state.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = (sim.state.u.iter().map(|v| v * v).sum::<f64>() * grid.dx).sqrt();
        run.norms.push((sim.t, linf, l2));
        if output {
            run.times.push(sim.t);
            run.fields.push(sim.state.clone());
        }
    };
    let pos = sim.check_front()?;
    record(&sim, &mut run, pos, true);
    for k in 1..=n_track {
        sim.advance_to(k as f64 * config.track_interval)?;
        let pos = sim.check_front()?;
        record(&sim, &mut run, pos, k % out_every == 0 || k == n_track);
    }
    run.steps = sim.steps;
    Ok(run)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WakeWavenumber {
    pub k_sel: f64,
    #[serde(rename = "L_sel")]
    pub l_sel: f64,
    /// Share of the (windowed) power within two bins of the peak.
    pub confidence: f64,
    pub periods_in_window: f64,
}

/// Dominant wavenumber of `u` on `[x_a, x_b]` from a Hann-windowed,
/// zero-padded periodogram with Gaussian (log-quadratic) peak interpolation.
pub fn extract_wake_wavenumber(grid: &Grid, u: &[f64], window: (f64, f64)) -> Result<WakeWavenumber, SimulateError> {
    let (xa, xb) = (window.0.max(grid.x0), window.1.min(grid.x1));
    let ja = ((xa - grid.x0) / grid.dx).ceil() as usize;
    let jb = (((xb - grid.x0) / grid.dx).floor() as usize).min(u.len() - 1);
    if jb <= ja + 16 {
        return Err(SimulateError::NoWake(format!(
            "window [{xa}, {xb}] holds too few points"
        )));
    }
    let seg = &u[ja..=jb];
    let m = seg.len();
    let mean = seg.iter().sum::<f64>() / m as f64;
    let var = seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
    if var.sqrt() < 1e-3 {
        return Err(SimulateError::NoWake(format!("flat window, std {:e}", var.sqrt())));
    }
    let nfft = (8 * m).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, v) in seg.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (m - 1) as f64).cos();
        buf[i] = Complex64::new((v - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let power: Vec<f64> = buf[..nfft / 2].iter().map(|z| z.norm_sqr()).collect();
    // skip the main lobe around k = 0 (Hann: 2 bins of the unpadded transform)
    let skip = 2 * nfft / m + 1;
    let (ip, _) = power
        .iter()
        .enumerate()
        .skip(skip)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| SimulateError::NoWake("empty spectrum".into()))?;
    if ip + 1 >= power.len() {
        return Err(SimulateError::NoWake("peak at the Nyquist frequency".into()));
    }
    let (a, b, c) = (power[ip - 1].ln(), power[ip].ln(), power[ip + 1].ln());
    let denom = a - 2.0 * b + c;
    let offset = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let bin = 2.0 * std::f64::consts::PI / (nfft as f64 * grid.dx);
    let k_sel = (ip as f64 + offset) * bin;
    let lobe = 2 * nfft / m;
    let near: f64 = power[ip.saturating_sub(lobe).max(skip)..(ip + lobe + 1).min(power.len())]
        .iter()
        .sum();
    let total: f64 = power.iter().skip(skip).sum();
    let l_sel = 2.0 * std::f64::consts::PI / k_sel;
    Ok(WakeWavenumber {
        k_sel,
        l_sel,
        confidence: near / total,
        periods_in_window: (m as f64 * grid.dx) / l_sel,
    })
}

// ---------------------------------------------------------------------------
// scheme oracles

/// Diffusion only: a unit Gaussian on `[−40, 40]` with N = 2048 has variance
/// growing as `2t`. Returns the worst relative deviation at `t ∈ {¼, ½, ¾, 1}`.
pub fn heat_oracle_error() -> Result<f64, SimulateError> {
    let g = Grid::new(-40.0, 40.0, 2048)?;
    let phys = Physics {
        diffusion: true,
        advection: false,
        reaction: false,
    };
    let p = ModelParams::new(0.4, 0.1, 0.005).map_err(|e| SimulateError::Invalid(e.to_string()))?;
    let dt = 1e-3;
    let mut s = Stepper::new(g.clone(), p, 0.0, dt, phys)?;
    let mut f = Fields::zeros(g.points());
    for j in 0..g.points() {
        f.u[j] = (-g.x(j).powi(2) / 2.0).exp();
    }
    let var = |u: &[f64]| {
        let m0: f64 = u.iter().sum();
        u.iter().enumerate().map(|(j, v)| v * g.x(j).powi(2)).sum::<f64>() / m0
    };
    let v0 = var(&f.u);
    let mut worst: f64 = 0.0;
    for k in 1..=1000 {
        s.step(&mut f);
        if k % 250 == 0 {
            let t = k as f64 * dt;
            worst = worst.max(((var(&f.u) - v0) - 2.0 * t).abs() / (2.0 * t));
        }
    }
    Ok(worst)
}

/// Advection only at c = 1 with dt = dx: after 100 steps a width-4 Gaussian
/// has moved 100 cells to the left. Returns the sup error.
pub fn advection_oracle_error() -> Result<f64, SimulateError> {
    let g = Grid::new(-50.0, 50.0, 2048)?;
    let phys = Physics {
        diffusion: false,
        advection: true,
        reaction: false,
    };
    let p = ModelParams::new(0.4, 0.1, 0.005).map_err(|e| SimulateError::Invalid(e.to_string()))?;
    let mut s = Stepper::new(g.clone(), p, 1.0, g.dx, phys)?;
    let mut f = Fields::zeros(g.points());
    let prof = |x: f64| (-((x - 10.0) / 4.0f64).powi(2)).exp();
    for j in 0..g.points() {
        f.u[j] = prof(g.x(j));
        f.w[j] = prof(g.x(j));
    }
    for _ in 0..100 {
        s.step(&mut f);
    }
    Ok((0..g.points())
        .map(|j| (f.u[j] - prof(g.x(j) + 100.0 * g.dx)).abs())
        .fold(0.0f64, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams<f64> {
        ModelParams::new(0.4, 0.1, 0.005).unwrap()
    }

    #[test]
    fn rest_state_is_fixed() {
        let g = Grid::new(-10.0, 10.0, 200).unwrap();
        let f = Fields::zeros(g.points());
        let out = step(&f, 0.01, &params(), 0.9, &g).unwrap();
        assert!(out.u.iter().chain(&out.w).all(|&v| v == 0.0));
    }

    #[test]
    fn heat_variance_grows_linearly() {
        let err = heat_oracle_error().unwrap();
        assert!(err < 0.01, "relative variance error {err}");
    }

    #[test]
    fn advection_translates_one_cell_per_step() {
        let err = advection_oracle_error().unwrap();
        assert!(err < 1e-3, "sup error {err:e}");
    }

    #[test]
    fn second_order_in_time() {
        let g = Grid::new(-20.0, 20.0, 256).unwrap();
        let mut init = Fields::zeros(g.points());
        for j in 0..g.points() {
            init.u[j] = 0.8 * (-(g.x(j) / 3.0).powi(2)).exp();
        }
        let run = |dt: f64| {
            let mut s = Stepper::new(g.clone(), params(), 0.9, dt, Physics::default()).unwrap();
            let mut f = init.clone();
            for _ in 0..(2.0 / dt).round() as usize {
                s.step(&mut f);
            }
            f
        };
        let a = run(0.02);
        let b = run(0.01);
        let c = run(0.005);
        let d = |x: &Fields, y: &Fields| x.u.iter().zip(&y.u).map(|(p, q)| (p - q).abs()).fold(0.0f64, f64::max);
        let ratio = d(&a, &b) / d(&b, &c);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn zero_seed_gives_empty_track() {
        let g = Grid::new(-50.0, 50.0, 200).unwrap();
        let cfg = SimConfig::new(
            params(),
            g,
            0.0,
            5.0,
            Seed::Localized {
                amplitude: 0.0,
                width: 2.0,
                center: 0.0,
            },
        );
        let run = run_invasion(&cfg).unwrap();
        assert!(run.front_track.is_empty());
        assert!(run.fields.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn white_noise_is_deterministic() {
        let g = Grid::new(-30.0, 30.0, 300).unwrap();
        let seed = Seed::WhiteNoise {
            amplitude: 1e-3,
            rng_seed: 7,
        };
        let mut cfg = SimConfig::new(params(), g, 0.0, 3.0, seed);
        cfg.output_interval = 1.0;
        let a = run_invasion(&cfg).unwrap();
        let b = run_invasion(&cfg).unwrap();
        for (x, y) in a.fields.iter().zip(&b.fields) {
            assert!(x.u.iter().zip(&y.u).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        cfg.seed = Seed::WhiteNoise {
            amplitude: 1e-3,
            rng_seed: 8,
        };
        let c = run_invasion(&cfg).unwrap();
        assert_ne!(a.fields[1], c.fields[1]);
    }

    #[test]
    fn sponge_damps_and_front_is_tracked() {
        let g = Grid::new(-20.0, 60.0, 400).unwrap().with_sponge(15.0, 1.0).unwrap();
        let seed = Seed::Localized {
            amplitude: 0.5,
            width: 3.0,
            center: 0.0,
        };
        let mut cfg = SimConfig::new(params(), g, 0.0, 60.0, seed);
        let err = run_invasion(&cfg).unwrap_err();
        assert!(matches!(err, SimulateError::DomainExhausted { .. }), "{err}");
        cfg.t_end = 20.0;
        let run = run_invasion(&cfg).unwrap();
        let (t0, x0) = run.front_track[5];
        let (t1, x1) = *run.front_track.last().unwrap();
        assert!(x1 > x0 && (x1 - x0) / (t1 - t0) > 0.5);
    }

    #[test]
    fn fhn1_round_trip() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let f = Fields {
            u: (0..9).map(|j| j as f64).collect(),
            w: (0..9).map(|j| -(j as f64)).collect(),
        };
        let mut buf = Vec::new();
        write_fhn1(&mut buf, g.x0, g.dx, &[0.0, 1.5], &[f.clone(), f.clone()]).unwrap();
        assert_eq!(&buf[..4], b"FHN1");
        assert_eq!(buf.len(), 4 + 24 + 16 + 16 + 2 * 9 * 2 * 8);
        let (x0, dx, t, fs) = read_fhn1(&buf[..]).unwrap();
        assert_eq!((x0, dx), (0.0, 0.125));
        assert_eq!(t, vec![0.0, 1.5]);
        assert_eq!(fs[1], f);
    }

    #[test]
    fn periodogram_recovers_cosine() {
        let g = Grid::new(0.0, 500.0, 2000).unwrap();
        let k0 = 2.0 * std::f64::consts::PI / 47.3;
        let u: Vec<f64> = (0..g.points()).map(|j| (k0 * g.x(j)).cos()).collect();
        let w = extract_wake_wavenumber(&g, &u, (20.0, 480.0)).unwrap();
        let bin = 2.0 * std::f64::consts::PI / 460.0;
        assert!((w.k_sel - k0).abs() < 0.05 * bin, "{} vs {k0}", w.k_sel);
        assert!(w.confidence > 0.9);
        let flat = vec![0.3; g.points()];
        assert!(matches!(
            extract_wake_wavenumber(&g, &flat, (20.0, 480.0)),
            Err(SimulateError::NoWake(_))
        ));
    }
}
