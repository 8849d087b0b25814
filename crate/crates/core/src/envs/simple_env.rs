//! Two-dimensional navigation with asymmetric, state-independent noise:
//! the distribution-propagation study environment.
//!
//! ```text
//! x' = x + dx + alpha * (0.1 e + e^2)
//! y' = y + dy
//! ```
//!
//! With `e ~ N(0, 1)` the noise term has mean `alpha` and a skewed shape, so
//! planners that ignore the noise distribution accumulate a bias of `alpha`
//! per step along `x`. The transition is quadratic in `e`, which makes the
//! second-order propagated mean exact.

use super::smooth::safe_dist;
use super::{Model, SuccessKind};
use crate::autodiff::{lit, AdScalar};
use crate::real::Real;
use rand::Rng;

const GOAL: (f64, f64) = (4.0, 3.0);
const GOAL_RADIUS: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct SimpleEnv<T> {
    alpha: T,
}

impl<T: Real> SimpleEnv<T> {
    pub fn new(alpha: T) -> Self {
        SimpleEnv { alpha }
    }
}

impl<T: Real> Model<T> for SimpleEnv<T> {
    fn name(&self) -> &'static str {
        "simple_env"
    }

    fn n_s(&self) -> usize {
        2
    }

    fn n_a(&self) -> usize {
        2
    }

    fn n_eps(&self) -> usize {
        1
    }

    fn action_bounds(&self) -> Vec<(T, T)> {
        vec![(T::c(-1.0), T::c(1.0)); 2]
    }

    fn var_names(&self) -> Vec<String> {
        vec!["x".to_string(), "y".to_string()]
    }

    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        let noise = (e[0].scale(T::c(0.1)) + e[0] * e[0]).scale(self.alpha);
        vec![s[0] + a[0] + noise, s[1] + a[1]]
    }

    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], _a: &[S]) -> S {
        let d = safe_dist(s[0].add_c(T::c(-GOAL.0)), s[1].add_c(T::c(-GOAL.1)));
        (lit::<S>(GOAL_RADIUS) - d).scale(T::c(10.0)).sigmoid()
    }

    fn is_done(&self, s: &[T]) -> bool {
        let dx = s[0] - T::c(GOAL.0);
        let dy = s[1] - T::c(GOAL.1);
        dx * dx + dy * dy <= T::c(GOAL_RADIUS * GOAL_RADIUS)
    }

    fn success_kind(&self) -> SuccessKind {
        SuccessKind::Reach
    }

    fn init_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<T> {
        vec![T::c(0.0), T::c(0.0)]
    }

    fn xy_indices(&self) -> Option<(usize, usize)> {
        Some((0, 1))
    }
}
