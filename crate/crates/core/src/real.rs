use crate::autodiff::AdScalar;
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::{Debug, Display};

/// Base floating-point scalar for every numeric module in this crate.
///
/// Implemented for `f32` and `f64`; all tolerances in the test suite assume
/// `f64`. Constants are written as `f64` literals in the code and converted
/// through [`Real::c`], which is exact for values representable in the target
/// type.
///
/// Every `Real` is also an [`AdScalar`] over itself, so simulation code and
/// differentiated code share one arithmetic surface. Where that makes a
/// method call ambiguous against `num_traits::Float`, call sites qualify the
/// trait explicitly.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + SampleUniform
    + AdScalar<Base = Self>
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable")
    }

    /// Converts to `f64` for reporting. Lossless for `f32`/`f64`.
    fn to_f64c(self) -> f64;

    /// Draws one sample from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    fn to_f64c(self) -> f64 {
        self as f64
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn to_f64c(self) -> f64 {
        self
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
