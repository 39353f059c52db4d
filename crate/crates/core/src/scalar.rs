//! Floating point abstraction shared by every probability and distance
//! computation in the crate.

use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for distances and probabilities: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + Product
    + 'static
{
    /// Absolute tolerance for "sums to one" style checks.
    const TOLERANCE: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar literal out of range")
    }

    #[inline]
    fn tolerance() -> Self {
        Self::lit(Self::TOLERANCE)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const TOLERANCE: f64 = 1e-12;
}

impl Scalar for f32 {
    const TOLERANCE: f64 = 1e-5;
}
