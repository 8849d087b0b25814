use crate::real::Real;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arguments of `recip`, `/`, and `ln` closer to zero than this are treated
/// as domain errors: the operation returns NaN and the caller's boundary
/// check reports it, instead of letting a near-singularity leak a huge but
/// finite value into the optimizer.
pub const GUARD_EPS: f64 = 1e-12;

/// Differentiable scalar: the closed set of operations that transition,
/// reward, and objective code may use.
///
/// `Base` is the underlying float. Plain floats implement the trait with
/// `Base = Self`, so the same generic code runs undifferentiated, under
/// forward-mode [`super::Dual2`], or on a reverse-mode [`super::Tape`].
///
/// Every operation is total. Domain violations poison the result with NaN;
/// `eval_partials` and `value_and_grad` convert poisoned results into
/// [`crate::Error::NonFinite`].
///
/// `max_val`/`min_val` are hard selects that branch on the primal value and
/// carry the derivative of the chosen side. They are meant as safeguards
/// (variance floors, probability clamps), not as modelling primitives;
/// dynamics and rewards use smooth surrogates instead.
pub trait AdScalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Base: Real;

    fn constant(c: Self::Base) -> Self;

    /// Primal value, stripped of every derivative lane.
    fn value(&self) -> Self::Base;

    /// True only for values with no derivative dependence and primal zero.
    /// Propagation uses this to skip seeded passes whose contribution is
    /// structurally zero; it must never be true for a value that carries a
    /// gradient path.
    fn is_const_zero(&self) -> bool;

    fn recip(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;

    /// `max(self, c)`: passes `self` through when `self >= c`, else the
    /// constant. Derivative is 1 or 0 accordingly.
    fn max_val(self, c: Self::Base) -> Self;

    /// `min(self, c)`: passes `self` through when `self <= c`.
    fn min_val(self, c: Self::Base) -> Self;

    fn zero() -> Self {
        Self::constant(Self::Base::c(0.0))
    }

    fn one() -> Self {
        Self::constant(Self::Base::c(1.0))
    }

    /// Multiplication by a plain constant.
    fn scale(self, c: Self::Base) -> Self {
        self * Self::constant(c)
    }

    /// Addition of a plain constant.
    fn add_c(self, c: Self::Base) -> Self {
        self + Self::constant(c)
    }

    /// Numerically stable logistic function, built from guarded primitives
    /// so it differentiates through every lane.
    fn sigmoid(self) -> Self {
        if self.value() >= Self::Base::c(0.0) {
            (Self::one() + (-self).exp()).recip()
        } else {
            let e = self.exp();
            e * (Self::one() + e).recip()
        }
    }
}

/// Lifts an `f64` literal into any differentiable scalar. The main way
/// model code writes constants: `x * lit(2.0)`.
#[inline]
pub fn lit<S: AdScalar>(x: f64) -> S {
    S::constant(<S::Base as Real>::c(x))
}

macro_rules! impl_adscalar_for_float {
    ($t:ty) => {
        impl AdScalar for $t {
            type Base = $t;

            fn constant(c: $t) -> Self {
                c
            }

            fn value(&self) -> $t {
                *self
            }

            fn is_const_zero(&self) -> bool {
                *self == 0.0
            }

            fn recip(self) -> Self {
                if self.abs() <= GUARD_EPS as $t {
                    <$t>::NAN
                } else {
                    1.0 / self
                }
            }

            fn ln(self) -> Self {
                if self <= GUARD_EPS as $t {
                    <$t>::NAN
                } else {
                    <$t>::ln(self)
                }
            }

            fn exp(self) -> Self {
                <$t>::exp(self)
            }

            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }

            fn sin(self) -> Self {
                <$t>::sin(self)
            }

            fn cos(self) -> Self {
                <$t>::cos(self)
            }

            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }

            fn max_val(self, c: $t) -> Self {
                if self >= c {
                    self
                } else {
                    c
                }
            }

            fn min_val(self, c: $t) -> Self {
                if self <= c {
                    self
                } else {
                    c
                }
            }
        }
    };
}

impl_adscalar_for_float!(f32);
impl_adscalar_for_float!(f64);
