//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point scalar: `f32` or `f64`.
///
/// Combines nalgebra's `RealField` (dense linear algebra, elementary
/// functions) with the num-traits conversions and the FFT element bound.
pub trait Real:
    RealField
    + Copy
    + Default
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Serialize
    + DeserializeOwned
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable integer")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn machine_eps() -> Self;

    fn inf() -> Self;
}

impl Real for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }
    fn inf() -> Self {
        f64::INFINITY
    }
}

impl Real for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }
    fn inf() -> Self {
        f32::INFINITY
    }
}

/// Shorthand for `T::lit(x)`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[inline]
pub(crate) fn two_pi<T: Real>() -> T {
    T::two_pi()
}
