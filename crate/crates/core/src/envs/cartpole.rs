//! Cart-pole swing balancing, with an optional hybrid binary marker
//! coordinate.
//!
//! Classic cart-pole physics (pole half-length 0.5, cart mass 1, pole mass
//! 0.1, force scale 10, dt 0.02), with noise of magnitude `alpha` added to
//! the applied force. The survival reward is a product of smooth gates on
//! cart position and pole angle instead of a hard alive indicator, so the
//! planner sees a useful gradient near the failure boundaries; termination
//! in simulation still uses the exact thresholds.
//!
//! The hybrid variant appends a binary coordinate that switches on when the
//! cart crosses `x = 0.5`. Its smooth transition is a `smooth_ge` surrogate;
//! the simulator snaps it to an exact bit. Holding the bit pays reward 3
//! per step instead of 1 (scaled by the survival gates), pulling the
//! optimal policy toward the marker.

use super::smooth::smooth_ge;
use super::{Model, SuccessKind, VarKind};
use crate::autodiff::{lit, AdScalar};
use crate::real::Real;
use rand::Rng;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LEN: f64 = 0.5;
const POLE_MASS_LEN: f64 = MASS_POLE * HALF_LEN;
const FORCE_SCALE: f64 = 10.0;
const DT: f64 = 0.02;
const X_LIMIT: f64 = 2.4;
const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;
const MARKER: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct CartPole<T> {
    alpha: T,
    hybrid: bool,
}

impl<T: Real> CartPole<T> {
    pub fn new(alpha: T, hybrid: bool) -> Self {
        CartPole { alpha, hybrid }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Smooth survival factor in (0, 1): near 1 inside the limits, 0.5 on
    /// the boundary.
    fn survival<S: AdScalar<Base = T>>(&self, x: S, theta: S) -> S {
        let xn = x.scale(T::c(1.0 / X_LIMIT));
        let tn = theta.scale(T::c(1.0 / THETA_LIMIT));
        let gx = smooth_ge(xn, T::c(-1.0), T::c(1.0)) * (S::one() - smooth_ge(xn, T::c(1.0), T::c(1.0)));
        let gt = smooth_ge(tn, T::c(-1.0), T::c(1.0)) * (S::one() - smooth_ge(tn, T::c(1.0), T::c(1.0)));
        gx * gt
    }
}

impl<T: Real> Model<T> for CartPole<T> {
    fn name(&self) -> &'static str {
        if self.hybrid {
            "cartpole_hybrid"
        } else {
            "cartpole"
        }
    }

    fn n_s(&self) -> usize {
        if self.hybrid {
            5
        } else {
            4
        }
    }

    fn n_a(&self) -> usize {
        1
    }

    fn n_eps(&self) -> usize {
        1
    }

    fn state_kinds(&self) -> Vec<VarKind> {
        let mut kinds = vec![VarKind::Continuous; 4];
        if self.hybrid {
            kinds.push(VarKind::Binary);
        }
        kinds
    }

    fn action_bounds(&self) -> Vec<(T, T)> {
        vec![(T::c(-1.0), T::c(1.0))]
    }

    fn var_names(&self) -> Vec<String> {
        let mut names = vec![
            "x".to_string(),
            "x_dot".to_string(),
            "theta".to_string(),
            "theta_dot".to_string(),
        ];
        if self.hybrid {
            names.push("marker".to_string());
        }
        names
    }

    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        let (x, x_dot, theta, theta_dot) = (s[0], s[1], s[2], s[3]);
        let force = a[0].scale(T::c(FORCE_SCALE)) + e[0].scale(self.alpha);
        let sin = theta.sin();
        let cos = theta.cos();
        let temp = (force + (theta_dot * theta_dot * sin).scale(T::c(POLE_MASS_LEN)))
            .scale(T::c(1.0 / TOTAL_MASS));
        let denom = (lit::<S>(4.0 / 3.0) - (cos * cos).scale(T::c(MASS_POLE / TOTAL_MASS)))
            .scale(T::c(HALF_LEN));
        let theta_acc = (sin.scale(T::c(GRAVITY)) - cos * temp) * denom.recip();
        let x_acc = temp - (theta_acc * cos).scale(T::c(POLE_MASS_LEN / TOTAL_MASS));
        let dt = T::c(DT);
        let mut next = vec![
            x + x_dot.scale(dt),
            x_dot + x_acc.scale(dt),
            theta + theta_dot.scale(dt),
            theta_dot + theta_acc.scale(dt),
        ];
        if self.hybrid {
            next.push(smooth_ge(next[0], T::c(MARKER), T::c(1.0)));
        }
        next
    }

    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], _a: &[S]) -> S {
        let alive = self.survival(s[0], s[2]);
        if self.hybrid {
            (S::one() + s[4].scale(T::c(2.0))) * alive
        } else {
            alive
        }
    }

    fn sim_transition(&self, s: &[T], a: &[T], e: &[T]) -> Vec<T> {
        let mut next = self.transition::<T>(s, a, e);
        if self.hybrid {
            next[4] = if next[0] > T::c(MARKER) {
                T::c(1.0)
            } else {
                T::c(0.0)
            };
        }
        next
    }

    fn is_done(&self, s: &[T]) -> bool {
        s[0].abs() > T::c(X_LIMIT) || s[2].abs() > T::c(THETA_LIMIT)
    }

    fn success_kind(&self) -> SuccessKind {
        SuccessKind::Survive
    }

    fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut s: Vec<T> = (0..4)
            .map(|_| rng.random_range(T::c(-0.05)..T::c(0.05)))
            .collect();
        if self.hybrid {
            let bit = if s[0] > T::c(MARKER) {
                T::c(1.0)
            } else {
                T::c(0.0)
            };
            s.push(bit);
        }
        s
    }
}
