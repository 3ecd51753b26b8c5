use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the learner is generic over.
///
/// Both `nalgebra` and `num-traits` expose methods like `abs` or `sqrt`, so
/// inside the crate they are always called through `Float::` to stay
/// unambiguous.
pub trait Scalar:
    RealField + Float + FromPrimitive + ToPrimitive + Copy + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal or statistic into `Self`.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Promotes a stored 32-bit embedding coordinate.
    fn from_embedding(x: f32) -> Self {
        <Self as FromPrimitive>::from_f32(x).expect("f32 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
