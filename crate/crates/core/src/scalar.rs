//! Scalar abstraction: the geometry, index and classifiers are generic over
//! the floating-point type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar (`f32` or `f64`) the numeric core is generic over.
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Display + 'static {
    /// Converts an `f64` constant into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
