//! Scalar abstraction shared by the geometric and statistical code.
//!
//! Everything numeric in this crate is written against [`Real`] so the same
//! code runs in `f32` (the on-disk precision of Velodyne scans) and `f64`
//! (calibration, statistics).

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + Default + FromPrimitive + ToPrimitive {
    /// Convert an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn as_f32(self) -> f32 {
        ToPrimitive::to_f32(&self).unwrap_or(f32::NAN)
    }

    /// Largest integer not greater than `self`, as `i64`.
    #[inline]
    fn floor_i64(self) -> i64 {
        self.floor().as_f64() as i64
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x` reduced into `[0, 2π)`.
pub fn wrap_two_pi<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let r = x % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    // `-tiny % 2π + 2π` rounds to exactly 2π
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}

/// `x` reduced into `[-π, π)`.
pub fn wrap_pi<T: Real>(x: T) -> T {
    wrap_two_pi(x + T::pi()) - T::pi()
}
