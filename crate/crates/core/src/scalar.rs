use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point voxel and feature type. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Send + Sync + Debug + Display + Default + 'static
{
    /// Converts an `f64` literal, panicking only on values the type cannot hold at all.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
