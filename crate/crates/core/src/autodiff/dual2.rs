use super::scalar::AdScalar;
use crate::real::Real;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Forward-mode hyper-dual scalar: primal plus one first- and one
/// second-derivative lane with respect to a single seed direction.
///
/// For `f(x)` evaluated at `x = Dual2::seeded(v)` the result carries
/// `(f(v), f'(v), f''(v))`. The lanes follow the truncated Taylor rules, so
/// one pass per input coordinate yields a Jacobian column and the matching
/// diagonal second-derivative column.
///
/// The base scalar is any [`AdScalar`], which is what lets a taped rollout
/// differentiate *through* these lanes: with `S = Var`, the lanes themselves
/// are reverse-mode variables.
#[derive(Clone, Copy, Debug)]
pub struct Dual2<S> {
    pub re: S,
    pub d1: S,
    pub d2: S,
}

impl<S> Dual2<S> {
    pub fn new(re: S, d1: S, d2: S) -> Self {
        Dual2 { re, d1, d2 }
    }
}

impl<S: AdScalar> Dual2<S> {
    /// Lifts a base scalar with zero derivative lanes.
    pub fn lift(re: S) -> Self {
        Dual2 {
            re,
            d1: S::zero(),
            d2: S::zero(),
        }
    }

    /// Lifts a base scalar as the seed coordinate: unit first lane.
    pub fn seeded(re: S) -> Self {
        Dual2 {
            re,
            d1: S::one(),
            d2: S::zero(),
        }
    }
}

/// Applies the chain rule for a univariate `f` given `f(v)`, `f'(v)`, `f''(v)`.
#[inline]
fn chain<S: AdScalar>(x: Dual2<S>, f: S, fp: S, fpp: S) -> Dual2<S> {
    Dual2 {
        re: f,
        d1: fp * x.d1,
        d2: fpp * x.d1 * x.d1 + fp * x.d2,
    }
}

#[inline]
fn two<S: AdScalar>() -> S {
    S::constant(<S::Base as Real>::c(2.0))
}

impl<S: AdScalar> Add for Dual2<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual2 {
            re: self.re + rhs.re,
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl<S: AdScalar> Sub for Dual2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual2 {
            re: self.re - rhs.re,
            d1: self.d1 - rhs.d1,
            d2: self.d2 - rhs.d2,
        }
    }
}

impl<S: AdScalar> Mul for Dual2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual2 {
            re: self.re * rhs.re,
            d1: self.d1 * rhs.re + self.re * rhs.d1,
            d2: self.d2 * rhs.re + two::<S>() * self.d1 * rhs.d1 + self.re * rhs.d2,
        }
    }
}

impl<S: AdScalar> Div for Dual2<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<S: AdScalar> Neg for Dual2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual2 {
            re: -self.re,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl<S: AdScalar> AdScalar for Dual2<S> {
    type Base = S::Base;

    fn constant(c: S::Base) -> Self {
        Dual2 {
            re: S::constant(c),
            d1: S::zero(),
            d2: S::zero(),
        }
    }

    fn value(&self) -> S::Base {
        self.re.value()
    }

    fn is_const_zero(&self) -> bool {
        self.re.is_const_zero() && self.d1.is_const_zero() && self.d2.is_const_zero()
    }

    fn recip(self) -> Self {
        // f = 1/v, f' = -1/v^2, f'' = 2/v^3; the guard lives in S::recip.
        let w = self.re.recip();
        let w2 = w * w;
        chain(self, w, -w2, two::<S>() * w2 * w)
    }

    fn ln(self) -> Self {
        let f = self.re.ln();
        let fp = self.re.recip();
        chain(self, f, fp, -(fp * fp))
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        chain(self, e, e, e)
    }

    fn sqrt(self) -> Self {
        // f' = 1/(2 sqrt v); the recip guard doubles as a derivative-domain
        // guard at v = 0.
        let r = self.re.sqrt();
        let fp = r.scale(<S::Base as Real>::c(2.0)).recip();
        let fpp = -fp * self.re.recip().scale(<S::Base as Real>::c(0.5));
        chain(self, r, fp, fpp)
    }

    fn sin(self) -> Self {
        let s = self.re.sin();
        let c = self.re.cos();
        chain(self, s, c, -s)
    }

    fn cos(self) -> Self {
        let s = self.re.sin();
        let c = self.re.cos();
        chain(self, c, -s, -c)
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let nb = <S::Base as num_traits::FromPrimitive>::from_i32(n).unwrap();
                let nnb = <S::Base as num_traits::FromPrimitive>::from_i32(n * (n - 1)).unwrap();
                let f = self.re.powi(n);
                let fp = self.re.powi(n - 1).scale(nb);
                let fpp = self.re.powi(n - 2).scale(nnb);
                chain(self, f, fp, fpp)
            }
        }
    }

    fn max_val(self, c: S::Base) -> Self {
        if self.re.value() >= c {
            self
        } else {
            Self::constant(c)
        }
    }

    fn min_val(self, c: S::Base) -> Self {
        if self.re.value() <= c {
            self
        } else {
            Self::constant(c)
        }
    }
}
