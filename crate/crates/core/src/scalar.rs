//! Numeric traits the simulator and the statistics are generic over.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Real floating-point scalar backing statevector amplitudes: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal, panicking only for values no float type can hold.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Norm drift tolerated after each gate application.
    fn norm_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(256.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Value type for proportions and agreement statistics.
///
/// Satisfied by the float types and by exact rationals such as
/// [`num_rational::Ratio<i64>`], which lets agreement statistics be checked
/// without rounding.
pub trait Proportion: Num + FromPrimitive + Copy + PartialOrd + Debug {
    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("count representable in proportion type")
    }
}

impl<T> Proportion for T where T: Num + FromPrimitive + Copy + PartialOrd + Debug {}
