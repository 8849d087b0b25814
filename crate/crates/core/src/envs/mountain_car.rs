//! Continuous mountain car on a periodic sinusoidal hill, optionally with a
//! sparser reward gate and redundant action dimensions.
//!
//! ```text
//! v' = clamp(v + u * 0.0015 - 0.0025 cos(3 x) + alpha * e, -0.07, 0.07)
//! x' = clamp(x + v', -1.2, 0.6)
//! ```
//!
//! The speed limit is what makes the task hard: the engine is weaker than
//! gravity, so the car must pump energy over several swings, and the clamp
//! caps the energy gained per swing. Noise enters before the speed limit, so
//! `|v| <= 0.07` holds regardless of `alpha`. The usual hard stop at the left
//! wall is omitted; trajectories from the start band never bind it. The
//! reward pays `100 * smooth_ge(x, 0.45, beta)` minus a quadratic action
//! cost over all action dimensions; `beta` controls how localized the goal
//! gate is, which is the sparse-reward axis of the benchmark. Action
//! dimensions beyond the first never enter the dynamics (the high-dimensional
//! variant); the action cost is the only signal that should drive them to
//! zero.

use super::smooth::smooth_ge;
use super::{Model, SuccessKind};
use crate::autodiff::AdScalar;
use crate::real::Real;
use rand::Rng;

const POWER: f64 = 0.0015;
const GRAVITY: f64 = 0.0025;
const MAX_SPEED: f64 = 0.07;
const MIN_POS: f64 = -1.2;
const MAX_POS: f64 = 0.6;
const GOAL: f64 = 0.45;
const ACTION_COST: f64 = 0.1;
const GOAL_REWARD: f64 = 100.0;

#[derive(Clone, Debug)]
pub struct MountainCar<T> {
    alpha: T,
    beta: T,
    n_redundant: usize,
    variant: &'static str,
}

impl<T: Real> MountainCar<T> {
    pub fn new(alpha: T, beta: T, n_redundant: usize) -> Self {
        MountainCar {
            alpha,
            beta,
            n_redundant,
            variant: if n_redundant > 0 {
                "mountain_car_highdim"
            } else {
                "mountain_car"
            },
        }
    }

    /// Overrides the reported name; the sparse catalog entry shares the
    /// dynamics but should keep its own name in logs and results.
    pub fn with_name(mut self, name: &'static str) -> Self {
        self.variant = name;
        self
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn n_redundant(&self) -> usize {
        self.n_redundant
    }
}

impl<T: Real> Model<T> for MountainCar<T> {
    fn name(&self) -> &'static str {
        self.variant
    }

    fn n_s(&self) -> usize {
        2
    }

    fn n_a(&self) -> usize {
        1 + self.n_redundant
    }

    fn n_eps(&self) -> usize {
        1
    }

    fn action_bounds(&self) -> Vec<(T, T)> {
        vec![(T::c(-1.0), T::c(1.0)); self.n_a()]
    }

    fn var_names(&self) -> Vec<String> {
        vec!["x".to_string(), "v".to_string()]
    }

    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        let (x, v) = (s[0], s[1]);
        let next_v = (v + a[0].scale(T::c(POWER)) - x.scale(T::c(3.0)).cos().scale(T::c(GRAVITY))
            + e[0].scale(self.alpha))
        .max_val(T::c(-MAX_SPEED))
        .min_val(T::c(MAX_SPEED));
        let next_x = (x + next_v).max_val(T::c(MIN_POS)).min_val(T::c(MAX_POS));
        vec![next_x, next_v]
    }

    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S]) -> S {
        let goal = smooth_ge(s[0], T::c(GOAL), self.beta).scale(T::c(GOAL_REWARD));
        let mut cost = S::zero();
        for &ai in a {
            cost = cost + ai * ai;
        }
        goal - cost.scale(T::c(ACTION_COST))
    }

    fn is_done(&self, s: &[T]) -> bool {
        s[0] >= T::c(GOAL)
    }

    fn success_kind(&self) -> SuccessKind {
        SuccessKind::Reach
    }

    fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        vec![rng.random_range(T::c(-0.6)..T::c(-0.4)), T::c(0.0)]
    }
}
