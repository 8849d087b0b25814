//! Benchmark environment catalog.
//!
//! Every environment is an *encapsulated* stochastic transition model: one
//! deterministic map `s' = T(s, a, e)` that takes the exogenous noise vector
//! `e` as an explicit input, with `e ~ N(0, I)` supplied by the simulator.
//! The same map is evaluated under plain floats to simulate, under
//! [`Dual2`](crate::autodiff::Dual2) to extract local partials, and under
//! tape variables to differentiate whole rollouts. Models therefore express
//! dynamics and rewards purely through [`AdScalar`] operations; binary
//! indicator coordinates are the one documented exception, where the
//! simulator snaps the smooth surrogate to an exact bit via
//! [`Model::sim_transition`].
//!
//! Dynamics are kept smooth: there are no hard state clamps, survival and
//! goal rewards go through [`smooth::smooth_ge`] gates, and obstacle costs
//! through softplus penetration depths. Non-smooth gym details that would
//! break derivative checks (velocity clamps, hard walls) are deliberately
//! absent, which changes absolute reward scales but no benchmark compares
//! against external implementations.

pub mod cartpole;
pub mod dubins;
pub mod mountain_car;
pub mod pendulum;
pub mod simple_env;
pub mod smooth;

use crate::autodiff::{AdScalar, DiffMap, MapDims};
use crate::error::{Error, Result};
use crate::real::Real;
use rand::Rng;
use std::path::PathBuf;

pub use cartpole::CartPole;
pub use dubins::{Dubins, DubinsMap, Obstacle};
pub use mountain_car::MountainCar;
pub use pendulum::{pendulum_analytic_partials, Pendulum, PendulumNoise};
pub use simple_env::SimpleEnv;

/// Marginal family of one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// How episode success is judged for an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuccessKind {
    /// Success means surviving to the episode cap without termination.
    Survive,
    /// Success means triggering `is_done` (reaching the goal) before the cap.
    Reach,
    /// No success notion; success-rate metrics are reported as absent.
    NotApplicable,
}

/// A planning model: smooth stochastic dynamics plus reward, with enough
/// metadata for simulation, propagation, and the harness.
pub trait Model<T: Real> {
    fn name(&self) -> &'static str;
    fn n_s(&self) -> usize;
    fn n_a(&self) -> usize;
    fn n_eps(&self) -> usize;

    fn state_kinds(&self) -> Vec<VarKind> {
        vec![VarKind::Continuous; self.n_s()]
    }

    fn action_kinds(&self) -> Vec<VarKind> {
        vec![VarKind::Continuous; self.n_a()]
    }

    /// Inclusive action bounds per dimension. Binary action dimensions use
    /// `(0, 1)`.
    fn action_bounds(&self) -> Vec<(T, T)>;

    /// State variable names, for trace and study exports.
    fn var_names(&self) -> Vec<String>;

    /// The encapsulated transition `s' = T(s, a, e)`.
    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S>;

    /// Reward of taking `a` in `s`.
    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S]) -> S;

    /// Simulator-side transition. Defaults to the smooth map; models with
    /// binary indicators override it to snap those coordinates to exact
    /// bits. This is the only place simulation may diverge from the
    /// differentiated model.
    fn sim_transition(&self, s: &[T], a: &[T], e: &[T]) -> Vec<T> {
        self.transition::<T>(s, a, e)
    }

    fn is_done(&self, s: &[T]) -> bool;

    fn success_kind(&self) -> SuccessKind;

    fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T>;

    /// Indices of planar position coordinates, when path-length metrics
    /// make sense.
    fn xy_indices(&self) -> Option<(usize, usize)> {
        None
    }

    /// Planar goal position, when one exists; used with [`Self::xy_indices`]
    /// for path-length metrics.
    fn goal_xy(&self) -> Option<(T, T)> {
        None
    }
}

/// The catalog, as one dispatchable type for harness and CLI use.
#[derive(Clone, Debug)]
pub enum EnvModel<T: Real> {
    CartPole(CartPole<T>),
    Pendulum(Pendulum<T>),
    MountainCar(MountainCar<T>),
    Dubins(Dubins<T>),
    SimpleEnv(SimpleEnv<T>),
}

macro_rules! dispatch {
    ($self:ident, $m:ident, $call:expr) => {
        match $self {
            EnvModel::CartPole($m) => $call,
            EnvModel::Pendulum($m) => $call,
            EnvModel::MountainCar($m) => $call,
            EnvModel::Dubins($m) => $call,
            EnvModel::SimpleEnv($m) => $call,
        }
    };
}

impl<T: Real> Model<T> for EnvModel<T> {
    fn name(&self) -> &'static str {
        dispatch!(self, m, m.name())
    }
    fn n_s(&self) -> usize {
        dispatch!(self, m, m.n_s())
    }
    fn n_a(&self) -> usize {
        dispatch!(self, m, m.n_a())
    }
    fn n_eps(&self) -> usize {
        dispatch!(self, m, m.n_eps())
    }
    fn state_kinds(&self) -> Vec<VarKind> {
        dispatch!(self, m, m.state_kinds())
    }
    fn action_kinds(&self) -> Vec<VarKind> {
        dispatch!(self, m, m.action_kinds())
    }
    fn action_bounds(&self) -> Vec<(T, T)> {
        dispatch!(self, m, m.action_bounds())
    }
    fn var_names(&self) -> Vec<String> {
        dispatch!(self, m, m.var_names())
    }
    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        dispatch!(self, m, m.transition(s, a, e))
    }
    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S]) -> S {
        dispatch!(self, m, m.reward(s, a))
    }
    fn sim_transition(&self, s: &[T], a: &[T], e: &[T]) -> Vec<T> {
        dispatch!(self, m, m.sim_transition(s, a, e))
    }
    fn is_done(&self, s: &[T]) -> bool {
        dispatch!(self, m, m.is_done(s))
    }
    fn success_kind(&self) -> SuccessKind {
        dispatch!(self, m, m.success_kind())
    }
    fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        dispatch!(self, m, m.init_state(rng))
    }
    fn xy_indices(&self) -> Option<(usize, usize)> {
        dispatch!(self, m, m.xy_indices())
    }
    fn goal_xy(&self) -> Option<(T, T)> {
        dispatch!(self, m, m.goal_xy())
    }
}

/// Construction parameters shared by the whole catalog. Fields an
/// environment does not use are ignored by it; `None` means the
/// environment's own default.
#[derive(Clone, Debug, Default, serde::Deserialize, serde::Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvParams {
    /// Noise magnitude. Zero gives deterministic dynamics.
    #[serde(default)]
    pub alpha: f64,
    /// Reward-gate sharpness multiplier (mountain car family).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Count of action dimensions that do not affect the dynamics
    /// (high-dimensional mountain car).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_redundant: Option<usize>,
    /// Map file for the navigation environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
}

/// Environment names accepted by [`make_env`].
pub const CATALOG: [&str; 8] = [
    "cartpole",
    "cartpole_hybrid",
    "pendulum",
    "mountain_car",
    "mountain_car_sparse",
    "mountain_car_highdim",
    "dubins",
    "simple_env",
];

/// Builds a catalog environment by name.
pub fn make_env<T: Real>(name: &str, params: &EnvParams) -> Result<EnvModel<T>> {
    if params.alpha < 0.0 || !params.alpha.is_finite() {
        return Err(Error::InvalidArgument {
            name: "alpha",
            reason: format!("must be finite and nonnegative, got {}", params.alpha),
        });
    }
    if let Some(beta) = params.beta {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::InvalidArgument {
                name: "beta",
                reason: format!("must be finite and positive, got {beta}"),
            });
        }
    }
    let alpha = T::c(params.alpha);
    let beta = |default: f64| T::c(params.beta.unwrap_or(default));
    Ok(match name {
        "cartpole" => EnvModel::CartPole(CartPole::new(alpha, false)),
        "cartpole_hybrid" => EnvModel::CartPole(CartPole::new(alpha, true)),
        "pendulum" => EnvModel::Pendulum(Pendulum::new(alpha, PendulumNoise::ScaledExp)),
        "mountain_car" => EnvModel::MountainCar(MountainCar::new(alpha, beta(1.0), 0)),
        "mountain_car_sparse" => EnvModel::MountainCar(
            MountainCar::new(alpha, beta(4.0), 0).with_name("mountain_car_sparse"),
        ),
        "mountain_car_highdim" => EnvModel::MountainCar(MountainCar::new(
            alpha,
            beta(1.0),
            params.n_redundant.unwrap_or(2),
        )),
        "dubins" => {
            let map = match &params.map {
                Some(path) => DubinsMap::load(path)?,
                None => DubinsMap::default(),
            };
            EnvModel::Dubins(Dubins::new(alpha, map))
        }
        "simple_env" => EnvModel::SimpleEnv(SimpleEnv::new(alpha)),
        other => return Err(Error::UnknownEnv(other.to_string())),
    })
}

/// Result of one simulated environment step.
#[derive(Clone, Debug)]
pub struct SimStep<T> {
    pub next: Vec<T>,
    pub reward: T,
    pub done: bool,
    /// True when the requested action was outside bounds and was clamped.
    pub clamped: bool,
}

/// Simulates one step: clamps the action into bounds (with a warning flag),
/// draws `e ~ N(0, I)`, applies the simulator transition, and evaluates the
/// reward of the clamped action in the current state.
///
/// The noise vector is always fully drawn, so the random stream advances
/// identically regardless of the noise magnitude.
pub fn step_sim<T: Real, M: Model<T>, R: Rng + ?Sized>(
    model: &M,
    s: &[T],
    a: &[T],
    rng: &mut R,
) -> Result<SimStep<T>> {
    if s.len() != model.n_s() {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: model.n_s(),
            got: s.len(),
        });
    }
    if a.len() != model.n_a() {
        return Err(Error::DimensionMismatch {
            what: "action",
            expected: model.n_a(),
            got: a.len(),
        });
    }
    let bounds = model.action_bounds();
    let mut clamped = false;
    let ac: Vec<T> = a
        .iter()
        .zip(bounds.iter())
        .map(|(&ai, &(lo, hi))| {
            if ai < lo || ai > hi {
                clamped = true;
                num_traits::clamp(ai, lo, hi)
            } else {
                ai
            }
        })
        .collect();
    if clamped {
        log::warn!(
            "action out of bounds for {}; clamped before stepping",
            model.name()
        );
    }
    let e: Vec<T> = (0..model.n_eps())
        .map(|_| T::standard_normal(rng))
        .collect();
    let next = model.sim_transition(s, &ac, &e);
    let reward = model.reward::<T>(s, &ac);
    if next.iter().any(|v| !v.is_finite()) || !reward.is_finite() {
        return Err(Error::non_finite(format!("simulated step of {}", model.name())));
    }
    let done = model.is_done(&next);
    Ok(SimStep {
        next,
        reward,
        done,
        clamped,
    })
}

/// [`DiffMap`] view of a model's transition.
pub struct TransitionMap<'m, T, M> {
    model: &'m M,
    _marker: std::marker::PhantomData<T>,
}

impl<'m, T, M> TransitionMap<'m, T, M> {
    pub fn new(model: &'m M) -> Self {
        TransitionMap {
            model,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<'m, T: Real, M: Model<T>> DiffMap<T> for TransitionMap<'m, T, M> {
    fn dims(&self) -> MapDims {
        MapDims {
            n_s: self.model.n_s(),
            n_a: self.model.n_a(),
            n_eps: self.model.n_eps(),
            n_out: self.model.n_s(),
        }
    }
    fn eval<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        self.model.transition(s, a, e)
    }
}

/// [`DiffMap`] view of a model's reward (noise arity zero).
pub struct RewardMap<'m, T, M> {
    model: &'m M,
    _marker: std::marker::PhantomData<T>,
}

impl<'m, T, M> RewardMap<'m, T, M> {
    pub fn new(model: &'m M) -> Self {
        RewardMap {
            model,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<'m, T: Real, M: Model<T>> DiffMap<T> for RewardMap<'m, T, M> {
    fn dims(&self) -> MapDims {
        MapDims {
            n_s: self.model.n_s(),
            n_a: self.model.n_a(),
            n_eps: 0,
            n_out: 1,
        }
    }
    fn eval<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], _e: &[S]) -> Vec<S> {
        vec![self.model.reward(s, a)]
    }
}
