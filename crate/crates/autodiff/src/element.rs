use std::fmt::{Debug, Display};
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar element type the engine runs on. Implemented for `f32` and `f64`.
pub trait Element:
    Float + FromPrimitive + ToPrimitive + AddAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants baked into ops.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in element type")
    }

    /// Widening conversion to `f64` for reporting and metrics.
    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("element converts to f64")
    }
}

impl Element for f32 {}
impl Element for f64 {}
