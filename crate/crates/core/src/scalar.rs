//! Scalar abstraction shared by the generic kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
///
/// The tolerances used throughout the crate are tuned for `f64`; `f32` is
/// supported by the kernels that make sense in single precision (model
/// evaluation, dispersion, small eigenproblems).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Machine epsilon as a convenience.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy literal conversion, `lit::<T>(0.5)`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}
