use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the engine computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless widening used by reports and the on-disk writers.
    fn to_f64_lossless(self) -> f64;

    /// Nearest representable value; `f64 -> f32` rounds.
    fn from_f64_nearest(x: f64) -> Self;

    fn from_f32_exact(x: f32) -> Self;
}

impl Scalar for f32 {
    fn to_f64_lossless(self) -> f64 {
        f64::from(self)
    }

    fn from_f64_nearest(x: f64) -> Self {
        x as f32
    }

    fn from_f32_exact(x: f32) -> Self {
        x
    }
}

impl Scalar for f64 {
    fn to_f64_lossless(self) -> f64 {
        self
    }

    fn from_f64_nearest(x: f64) -> Self {
        x
    }

    fn from_f32_exact(x: f32) -> Self {
        f64::from(x)
    }
}

#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64_nearest(x)
}
