use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Floating-point element type accepted by the tensor and metric code.
pub trait Scalar: Float + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    fn count(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
