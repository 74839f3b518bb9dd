//! Floating-point scalar abstraction shared by every geometric routine.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// floating point: f32 or f64
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    /// Converts a count into this scalar type.
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn to_f32_lossy(self) -> f32 {
        ToPrimitive::to_f32(&self).unwrap_or(f32::NAN)
    }

    /// Tolerance used when validating rotation orthonormality.
    ///
    /// 1e-9 for `f64`; for narrower types the bound widens to a few ulps
    /// of the representation since 1e-9 is below `f32` resolution.
    fn rotation_tolerance() -> Self {
        let eps = Self::default_epsilon() * Self::lit(64.0);
        let floor = Self::lit(1e-9);
        if eps > floor {
            eps
        } else {
            floor
        }
    }

    fn nan() -> Self {
        Self::lit(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
