//! Smooth surrogates for the non-smooth pieces benchmark rewards need:
//! threshold indicators, penetration depths, and soft minima.

use crate::autodiff::{lit, AdScalar};
use crate::real::Real;

/// Smooth indicator of `x >= target`: `sigmoid(10 * beta * (x - target))`.
///
/// Equals `0.5` exactly at the target; `beta` scales the sharpness (the
/// factor 10 is part of the definition, so `beta = 1` already transitions
/// over roughly `|x - target| < 0.5`).
pub fn smooth_ge<S: AdScalar>(x: S, target: S::Base, beta: S::Base) -> S {
    let k = <S::Base as Real>::c(10.0) * beta;
    x.add_c(-target).scale(k).sigmoid()
}

/// `ln(1 + exp(x))`, switching to the linear asymptote for large `x` so the
/// exponential never overflows. The two branches agree to beyond `f64`
/// precision at the switch point.
pub fn softplus<S: AdScalar>(x: S) -> S {
    if x.value() > <S::Base as Real>::c(30.0) {
        x
    } else {
        (x.exp() + S::one()).ln()
    }
}

/// Smooth minimum `-(1/k) ln(e^{-ka} + e^{-kb})`, computed in the shifted
/// form `lo - (1/k) ln(1 + e^{-k (hi - lo)})` so the exponent is never
/// positive. The value branch only reorders the symmetric expression, so
/// derivatives stay continuous across ties.
pub fn smooth_min<S: AdScalar>(a: S, b: S, k: f64) -> S {
    let (lo, hi) = if a.value() <= b.value() { (a, b) } else { (b, a) };
    let kb = <S::Base as Real>::c(k);
    let inv_k = <S::Base as Real>::c(1.0) / kb;
    lo - (((lo - hi).scale(kb)).exp() + S::one()).ln().scale(inv_k)
}

/// Smooth penetration depth: approaches `x` for `x >> 1/k` and `0` for
/// `x << -1/k`. Used for obstacle costs.
pub fn smooth_relu<S: AdScalar>(x: S, k: f64) -> S {
    let kb = <S::Base as Real>::c(k);
    let inv_k = <S::Base as Real>::c(1.0) / kb;
    softplus(x.scale(kb)).scale(inv_k)
}

/// Smooth band indicator of `lo <= x <= hi`, normalized so the gates reach
/// `sigmoid(10)` at the midpoint of a unit-width band.
pub fn smooth_band<S: AdScalar>(x: S, lo: S::Base, hi: S::Base, beta: S::Base) -> S {
    smooth_ge(x, lo, beta) * (S::one() - smooth_ge(x, hi, beta))
}

/// Squared Euclidean distance of a point to a target, with a small positive
/// floor so the square root stays differentiable everywhere.
pub fn safe_dist<S: AdScalar>(dx: S, dy: S) -> S {
    (dx * dx + dy * dy + lit(1e-6)).sqrt()
}
