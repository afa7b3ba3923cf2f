//! Scalar abstraction shared by every numeric routine in the crate.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
///
/// Random draws are always made in `f64` and converted with [`Real::lit`], so
/// an `f32` and an `f64` build seeded identically see the same stream.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant (rounding for `f32`).
    fn lit(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// IEEE total ordering; NaNs sort last.
    fn total_order(&self, other: &Self) -> Ordering;

    /// Appends the little-endian bit pattern, used for checksums.
    fn push_bits(self, out: &mut Vec<u8>);
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn total_order(&self, other: &Self) -> Ordering {
                self.total_cmp(other)
            }

            fn push_bits(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_bits().to_le_bytes());
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
