//! Online planning by propagating product-form state distributions through a
//! Taylor approximation of stochastic dynamics, with gradient-based policy
//! optimization, shooting baselines (CEM, MPPI), a benchmark environment
//! catalog, and an experiment harness.
//!
//! The numeric core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the `*64` aliases below fix the common
//! double-precision instantiations. The harness and CLI work in `f64`.

pub mod autodiff;
pub mod baselines;
pub mod envs;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod propagate;
pub mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type Dual64 = autodiff::Dual2<f64>;
pub type Tape64 = autodiff::Tape<f64>;
pub type Bundle64 = autodiff::PartialsBundle<f64>;
pub type Env64 = envs::EnvModel<f64>;
pub type Marginals64 = propagate::Marginals<f64>;
pub type PlannerConfig64 = optimizer::PlannerConfig<f64>;
pub type ShootingConfig64 = baselines::ShootingConfig<f64>;
