//! Torque-limited pendulum swing-up.
//!
//! Dynamics in angle/velocity coordinates with gravity constant
//! `c1 = 3 g / (2 l) = 14.715` and torque gain `c2 = 3 / (m l^2) = 3`
//! (g = 9.81, m = l = 1), integrated with dt = 0.05:
//!
//! ```text
//! theta_dot' = theta_dot + (-c1 sin(theta + pi) + c2 u) dt
//! theta'     = theta + (theta_dot' + noise) dt
//! ```
//!
//! Noise enters the angle integration, in one of two forms selected by
//! [`PendulumNoise`]: `Additive` adds `alpha * e`; `ScaledExp` (the
//! benchmark form) adds `alpha * exp(e)`, a skewed, biased perturbation.
//!
//! The reward is the smooth periodic cost
//! `-(2 (1 - cos theta) + 0.1 theta_dot^2 + 0.001 u^2)`, which matches the
//! usual squared wrapped angle to second order around upright but has no
//! wrap-around kink. There is no velocity clamp and no termination.
//!
//! [`pendulum_analytic_partials`] gives hand-derived Jacobians and diagonal
//! curvature blocks for both noise forms, used to validate the automatic
//! machinery.

use super::{Model, SuccessKind};
use crate::autodiff::{AdScalar, Mat, PartialsBundle};
use crate::real::Real;
use rand::Rng;
use std::f64::consts::PI;

const G: f64 = 9.81;
const C1: f64 = 3.0 * G / 2.0;
const C2: f64 = 3.0;
const DT: f64 = 0.05;
const MAX_TORQUE: f64 = 2.0;

/// Form of the exogenous noise term added to the angle integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PendulumNoise {
    /// `alpha * e`: zero-mean, matches the closed-form derivation with
    /// constant noise Jacobian.
    Additive,
    /// `alpha * exp(e)`: the benchmark's skewed noise with nonzero mean and
    /// curvature in the noise direction.
    ScaledExp,
}

#[derive(Clone, Debug)]
pub struct Pendulum<T> {
    alpha: T,
    noise: PendulumNoise,
}

impl<T: Real> Pendulum<T> {
    pub fn new(alpha: T, noise: PendulumNoise) -> Self {
        Pendulum { alpha, noise }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn noise_kind(&self) -> PendulumNoise {
        self.noise
    }
}

impl<T: Real> Model<T> for Pendulum<T> {
    fn name(&self) -> &'static str {
        "pendulum"
    }

    fn n_s(&self) -> usize {
        2
    }

    fn n_a(&self) -> usize {
        1
    }

    fn n_eps(&self) -> usize {
        1
    }

    fn action_bounds(&self) -> Vec<(T, T)> {
        vec![(T::c(-MAX_TORQUE), T::c(MAX_TORQUE))]
    }

    fn var_names(&self) -> Vec<String> {
        vec!["theta".to_string(), "theta_dot".to_string()]
    }

    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        let (theta, theta_dot) = (s[0], s[1]);
        let acc = -theta.add_c(T::c(PI)).sin().scale(T::c(C1)) + a[0].scale(T::c(C2));
        let next_dot = theta_dot + acc.scale(T::c(DT));
        let noise = match self.noise {
            PendulumNoise::Additive => e[0].scale(self.alpha),
            PendulumNoise::ScaledExp => e[0].exp().scale(self.alpha),
        };
        let next_theta = theta + (next_dot + noise).scale(T::c(DT));
        vec![next_theta, next_dot]
    }

    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S]) -> S {
        let upright = (S::one() - s[0].cos()).scale(T::c(2.0));
        let spin = (s[1] * s[1]).scale(T::c(0.1));
        let effort = (a[0] * a[0]).scale(T::c(0.001));
        -(upright + spin + effort)
    }

    fn is_done(&self, _s: &[T]) -> bool {
        false
    }

    fn success_kind(&self) -> SuccessKind {
        SuccessKind::NotApplicable
    }

    fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        vec![
            rng.random_range(T::c(-PI)..T::c(PI)),
            rng.random_range(T::c(-1.0)..T::c(1.0)),
        ]
    }
}

/// Hand-derived partials of the pendulum transition at `(theta, theta_dot,
/// u, e)`, covering both noise forms. Output order is `[theta', theta_dot']`.
pub fn pendulum_analytic_partials<T: Real>(
    pendulum: &Pendulum<T>,
    theta: T,
    theta_dot: T,
    u: T,
    e: T,
) -> PartialsBundle<T> {
    let dt = T::c(DT);
    let c1 = T::c(C1);
    let c2 = T::c(C2);
    let alpha = pendulum.alpha;
    let z = T::c(0.0);

    let sin_shift = num_traits::Float::sin(theta + T::c(PI));
    let cos_shift = num_traits::Float::cos(theta + T::c(PI));

    let next_dot = theta_dot + (-c1 * sin_shift + c2 * u) * dt;
    let noise = match pendulum.noise_kind() {
        PendulumNoise::Additive => alpha * e,
        PendulumNoise::ScaledExp => alpha * num_traits::Float::exp(e),
    };
    let next_theta = theta + (next_dot + noise) * dt;

    let mut j_s = Mat::fill(2, 2, z);
    j_s[(0, 0)] = T::c(1.0) - c1 * cos_shift * dt * dt;
    j_s[(0, 1)] = dt;
    j_s[(1, 0)] = -c1 * cos_shift * dt;
    j_s[(1, 1)] = T::c(1.0);

    let mut j_a = Mat::fill(2, 1, z);
    j_a[(0, 0)] = c2 * dt * dt;
    j_a[(1, 0)] = c2 * dt;

    let (dn, ddn) = match pendulum.noise_kind() {
        PendulumNoise::Additive => (alpha, z),
        PendulumNoise::ScaledExp => {
            let g = alpha * num_traits::Float::exp(e);
            (g, g)
        }
    };
    let mut j_eps = Mat::fill(2, 1, z);
    j_eps[(0, 0)] = dn * dt;

    let mut h_s = Mat::fill(2, 2, z);
    h_s[(0, 0)] = c1 * sin_shift * dt * dt;
    h_s[(1, 0)] = c1 * sin_shift * dt;

    let h_a = Mat::fill(2, 1, z);
    let mut h_eps = Mat::fill(2, 1, z);
    h_eps[(0, 0)] = ddn * dt;

    PartialsBundle {
        value: vec![next_theta, next_dot],
        j_s,
        j_a,
        j_eps,
        h_s,
        h_a,
        h_eps,
    }
}
