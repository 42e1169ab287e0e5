//! Scalar abstraction for the numeric kernel.
//!
//! Distances, energies and prices are generic over a floating-point type so
//! the whole pipeline runs on `f32` or `f64`; times are plain integer minutes
//! everywhere and are not part of the abstraction.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` value (typically a literal or parsed input) into `T`.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 -> scalar")
}

/// Widens a scalar to `f64` (exact for both supported types).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("scalar -> f64")
}

/// Converts an integer minute count into `T`.
#[inline]
pub fn minutes<T: Scalar>(m: i64) -> T {
    cast(m as f64)
}
