//! Scalar abstraction for the numeric pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit is generic over: `f32` or `f64`.
///
/// Raw data (event values, configured weights and bounds) is parsed as
/// `f64` and converted once on entry via [`Real::from_config`].
pub trait Real:
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
    + 'static
{
    /// Lossy conversion from a config-space `f64`.
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to any Real")
    }

    /// Widening conversion back to `f64` for reporting.
    fn to_report(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float
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
        + 'static
{
}
