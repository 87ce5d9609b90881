//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// All estimators are written against this trait. The statistical tolerances
/// quoted in the documentation assume `f64`; `f32` works but loses the
/// guarantees below roughly `1e-6`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Margin kept between a squared loading norm and 1 before the
    /// `(1 - ‖b‖²)^{-1/2}` transform.
    fn loading_margin() -> Self {
        let eps = Self::epsilon() * lit(8.0);
        let base: Self = lit(1e-8);
        if eps > base {
            eps
        } else {
            base
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in target scalar")
}
