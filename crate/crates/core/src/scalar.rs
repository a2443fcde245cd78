use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the geometry and summation kernels.
///
/// Implemented for `f32` and `f64`. Everything above the half-plane layer
/// (group construction, enumeration, statistics) is instantiated at `f64`;
/// the tolerances in [`crate::Tolerances`] are calibrated for double
/// precision.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
