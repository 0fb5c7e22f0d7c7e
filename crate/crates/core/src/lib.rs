//! Pulled pattern-forming fronts in the FitzHugh–Nagumo system
//!
//! ```text
//! u_t = u_xx + u(1-u)(u-a) - w
//! w_t = eps (u - gamma w)
//! ```
//!
//! invading the unstable rest state and leaving a periodic wave train behind.
//!
//! The pipeline runs from the dispersion relation of the leading edge
//! ([`dispersion`]) to the selected wave train ([`wavetrain`]), its Bloch and
//! Floquet spectra ([`spectra`]), direct simulation ([`simulate`]), decay
//! measurements on perturbed fronts ([`diagnostics`]) and contour-integral
//! estimates on model families ([`contours`]). [`checks`] collects the
//! acceptance suite.
//!
//! Generic code is written over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`, which is what everything past the dispersion relation uses.
//!
//! ```
//! use fhn_lab::{solve_spreading_speed, Params, SpreadingOptions};
//!
//! let p = Params::new(0.4, 0.1, 0.0).unwrap();
//! let s = solve_spreading_speed(&p, None, &SpreadingOptions::default()).unwrap();
//! assert!((s.c_lin - 2.0 * 0.24f64.sqrt()).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read better than zipped iterators in the stencil code
#![allow(clippy::needless_range_loop)]

pub mod checks;
pub mod contours;
pub mod diagnostics;
pub mod dispersion;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod spectra;
pub mod spectral;
pub mod wavetrain;

pub use dispersion::{solve_spreading_speed, SpreadingOptions};
pub use simulate::{run_invasion, Grid, Seed, SimConfig, CSV_HEADER};
pub use spectra::{bloch_spectrum, BlochOptions};
pub use wavetrain::{wavetrain_at_speed, WaveTrain};

pub type Params = model::ModelParams<f64>;
pub type Spreading = dispersion::SpreadingSpeed<f64>;
pub type Weight = model::WeightSpec<f64>;
