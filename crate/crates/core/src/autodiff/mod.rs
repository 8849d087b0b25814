//! Scalar automatic differentiation primitives.
//!
//! Three scalar kinds share one arithmetic interface, [`AdScalar`]:
//!
//! * plain floats (`f32`/`f64`) for simulation and finite differences,
//! * [`Dual2`], a forward-mode hyper-dual carrying one first- and one
//!   second-derivative lane, used to extract Jacobian and diagonal-Hessian
//!   columns of transition and reward maps one seeded pass per coordinate,
//! * [`Var`], a reverse-mode variable recording onto a [`Tape`], used to
//!   differentiate whole planning objectives with respect to policy
//!   parameters.
//!
//! The kinds compose: `Dual2<Var>` propagates second-order terms through a
//! taped rollout, so reverse mode sees the exact contribution of the
//! curvature correction, including its third-order effects on the policy
//! gradient.
//!
//! Division, `recip`, and `ln` are guarded: at arguments within `1e-12` of
//! zero they produce NaN rather than a silent large value, and the boundary
//! functions ([`eval_partials`], [`value_and_grad`]) turn any non-finite
//! component into an error.

mod dual2;
mod gradient;
mod partials;
mod scalar;
mod tape;

pub use dual2::Dual2;
pub use gradient::{check_gradient, grad_fd, value_and_grad, value_and_grad_on, ScalarFn};
pub use partials::{eval_partials, partials_with_masks, DiffMap, MapDims, Mat, PartialsBundle};
pub use scalar::{lit, AdScalar, GUARD_EPS};
pub use tape::{Tape, Var};
