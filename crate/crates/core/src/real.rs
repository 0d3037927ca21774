//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Everything in the crate is written against this trait; the concrete
/// `f64` aliases at the crate root are what the CLI and most tests use.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Display + 'static
{
    /// Binary exponent range, as in `f64::MAX_EXP`.
    const MAX_EXP: i32;

    /// Converts an `f64` literal or parameter into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion back to `f64` (for reporting and error payloads).
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Converts a count into this scalar.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    const MAX_EXP: i32 = f32::MAX_EXP;
}
impl Real for f64 {
    const MAX_EXP: i32 = f64::MAX_EXP;
}
