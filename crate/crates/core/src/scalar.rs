//! Scalar abstraction shared by the geometry, loss and assignment kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the kernels are generic over (`f32` or `f64`).
///
/// `geom_tol` is the single tolerance used for collinearity, point-on-edge and
/// zero-area tests, expressed in scene units.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn geom_tol() -> Self;

    /// Converts an `f64` literal. Every value used in the kernels is representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn geom_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn geom_tol() -> Self {
        1e-5
    }
}
