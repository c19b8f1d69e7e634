//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the detectors are generic over. Implemented for
/// `f32` and `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts a literal or an `f64` intermediate into `Self`.
    fn of(x: f64) -> Self;

    /// Widens `self` to `f64`.
    fn as_f64(self) -> f64;

    /// Converts a count into `Self`.
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    /// Smallest norm still treated as a non-zero direction.
    fn tiny() -> Self {
        let t = Self::of(1e-300);
        if t > Self::zero() {
            t
        } else {
            Self::min_positive_value()
        }
    }
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}
