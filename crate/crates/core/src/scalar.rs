//! Scalar abstraction shared by the transport solvers and the metrics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Squared Euclidean distance, summed in coordinate order.
///
/// Every nearest-neighbour path in the crate goes through this function so
/// that indexed and exhaustive searches agree bit for bit.
#[inline]
pub fn squared_distance<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    let mut acc = T::zero();
    for k in 0..D {
        let d = a[k] - b[k];
        acc = acc + d * d;
    }
    acc
}

#[inline]
pub fn distance<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    squared_distance(a, b).sqrt()
}
