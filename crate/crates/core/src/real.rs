//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Real`] (in practice `f32` or `f64`).

use num_traits::{Float, FloatConst, FromPrimitive, Signed};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Signed
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for `Self::from_f64(x).unwrap()`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Shorthand for converting a count into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    /// 4π, the surface measure of the unit sphere.
    fn four_pi() -> Self {
        Self::of(4.0) * Self::PI()
    }
}

impl Real for f32 {}
impl Real for f64 {}
