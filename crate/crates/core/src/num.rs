//! Scalar abstraction for signal math.

use num_traits::{Float, FromPrimitive};

/// Floating-point sample scalar: `f32` or `f64`.
pub trait Sample:
    Float + FromPrimitive + Default + std::fmt::Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion for accumulation and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(0.0)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::zero)
    }
}

impl Sample for f32 {}
impl Sample for f64 {}
