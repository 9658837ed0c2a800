//! Scalar abstraction shared by the geometry, quadrature and special-function layers.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating scalar used by the generic numeric code (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + NumAssign + Debug + Default + Send + Sync + 'static {
    /// Machine epsilon of the type.
    const EPS: Self;

    /// Convert an `f64` literal. Panics only for types that cannot represent finite `f64`s.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;
}
