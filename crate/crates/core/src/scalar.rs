//! Floating-point abstraction shared by the geometric, statistical and
//! numerical parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used throughout the crate. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Relative tolerance under which two objective values count as tied.
    fn tie_tolerance() -> Self;

    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize is representable")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    fn tie_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn tie_tolerance() -> Self {
        1e-10
    }
}

/// `a` is smaller than `b` by more than the tie tolerance (scaled by magnitude).
pub(crate) fn clearly_less<T: Scalar>(a: T, b: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    a < b - T::tie_tolerance() * scale
}

/// `a` is within the tie tolerance of `limit` or below it.
pub(crate) fn at_most<T: Scalar>(a: T, limit: T) -> bool {
    let scale = T::one().max(a.abs()).max(limit.abs());
    a <= limit + T::tie_tolerance() * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerant_comparisons() {
        assert!(clearly_less(1.0f64, 2.0));
        assert!(!clearly_less(1.0f64, 1.0 + 1e-14));
        assert!(at_most(1.0f64 + 1e-14, 1.0));
        assert!(!at_most(1.1f64, 1.0));
        assert!(at_most(1.0f32, 1.0));
    }
}
