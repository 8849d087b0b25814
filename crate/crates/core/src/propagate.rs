//! Product-form distribution propagation through a stochastic transition.
//!
//! The planner never samples during lookahead. Each state variable carries a
//! `(mean, variance)` marginal, actions carry the same, and the exogenous
//! noise is standard normal by construction. One propagation step expands
//! the encapsulated transition `T(s, a, e)` to second order around the point
//! `z = (mean_s, mean_a, 0)` and pushes the marginals through it:
//!
//! ```text
//! mean'_i = T_i(z) + 1/2 [ sum_k d2T_i/ds_k^2 v_s_k
//!                        + sum_k d2T_i/da_k^2 v_a_k
//!                        + sum_k d2T_i/de_k^2 ]
//! var'_i  =            sum_k (dT_i/ds_k)^2 v_s_k
//!                    + sum_k (dT_i/da_k)^2 v_a_k
//!                    + sum_k (dT_i/de_k)^2
//! ```
//!
//! using only diagonal curvature, consistent with treating all inputs as
//! independent. The expected reward applies the same expansion to the reward
//! map. Binary state variables are the exception: their propagated mean is
//! clamped to `[0, 1]` and re-marginalized as Bernoulli, `v = p (1 - p)`.
//!
//! Everything here is generic over [`AdScalar`], so the same code propagates
//! plain floats (simulation-time lookahead), [`Dual2`](crate::autodiff::Dual2)
//! lanes, and tape variables (differentiating a whole rollout with respect
//! to the action marginals).
//!
//! Variance terms that are structurally zero (constant zero scalars) switch
//! their derivative passes off entirely; a constant carries no gradient, so
//! the skipped work could only have contributed exact zeros.

use crate::autodiff::{partials_with_masks, AdScalar};
use crate::envs::{Model, RewardMap, TransitionMap, VarKind};
use crate::error::{Error, Result};
use crate::real::Real;
use rand::Rng;
use std::fmt::Write as _;

/// Which second-moment information a propagation run tracks. The reduced
/// modes are the ablations used in the benchmark studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// Track state, action, and noise variance (the full method).
    Complete,
    /// Drop all variances: a deterministic rollout through the means.
    NoVariance,
    /// Track state and noise variance but treat actions as deterministic.
    StateVariance,
}

/// Independent `(mean, variance)` marginals for a block of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals<S> {
    pub mean: Vec<S>,
    pub var: Vec<S>,
}

impl<S: AdScalar> Marginals<S> {
    /// A point mass: zero variance on every coordinate.
    pub fn point(mean: Vec<S>) -> Self {
        let var = vec![S::zero(); mean.len()];
        Marginals { mean, var }
    }

    /// Lifts a concrete state into constants of the working scalar type.
    pub fn lift_point(state: &[S::Base]) -> Self {
        Marginals::point(state.iter().map(|&v| S::constant(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    fn all_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.var.iter())
            .all(|v| num_traits::Float::is_finite(v.value()))
    }
}

fn check_arity<S>(model_n: usize, m: &Marginals<S>, what: &'static str) -> Result<()> {
    if m.mean.len() != model_n || m.var.len() != model_n {
        return Err(Error::DimensionMismatch {
            what,
            expected: model_n,
            got: m.mean.len().max(m.var.len()),
        });
    }
    Ok(())
}

/// Variance masks for one step under a given mode. A coordinate is active
/// when its variance can contribute: the mode tracks it and it is not a
/// structural zero.
fn block_masks<S: AdScalar>(
    mode: PropagationMode,
    state: &Marginals<S>,
    action: &Marginals<S>,
    n_eps: usize,
) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    let track = |on: bool, var: &[S]| -> Vec<bool> {
        var.iter().map(|v| on && !v.is_const_zero()).collect()
    };
    let on_state = mode != PropagationMode::NoVariance;
    let on_action = mode == PropagationMode::Complete;
    let on_noise = mode != PropagationMode::NoVariance;
    (
        track(on_state, &state.var),
        track(on_action, &action.var),
        vec![on_noise; n_eps],
    )
}

/// Pushes the marginals one step through the transition.
pub fn propagate_step<T, S, M>(
    model: &M,
    state: &Marginals<S>,
    action: &Marginals<S>,
    mode: PropagationMode,
) -> Result<Marginals<S>>
where
    T: Real,
    S: AdScalar<Base = T>,
    M: Model<T>,
{
    check_arity(model.n_s(), state, "state marginals")?;
    check_arity(model.n_a(), action, "action marginals")?;
    let n_s = model.n_s();
    let n_eps = model.n_eps();
    let (mask_s, mask_a, mask_e) = block_masks(mode, state, action, n_eps);
    let e_mean = vec![S::zero(); n_eps];
    let bundle = partials_with_masks(
        &TransitionMap::new(model),
        &state.mean,
        &action.mean,
        &e_mean,
        &mask_s,
        &mask_a,
        &mask_e,
    );

    let half = T::c(0.5);
    let kinds = model.state_kinds();
    let mut mean = Vec::with_capacity(n_s);
    let mut var = Vec::with_capacity(n_s);
    for i in 0..n_s {
        let mut m = bundle.value[i];
        let mut v = S::zero();
        for (k, _) in mask_s.iter().enumerate().filter(|(_, &on)| on) {
            m = m + (bundle.h_s[(i, k)] * state.var[k]).scale(half);
            let j = bundle.j_s[(i, k)];
            v = v + j * j * state.var[k];
        }
        for (k, _) in mask_a.iter().enumerate().filter(|(_, &on)| on) {
            m = m + (bundle.h_a[(i, k)] * action.var[k]).scale(half);
            let j = bundle.j_a[(i, k)];
            v = v + j * j * action.var[k];
        }
        for (k, _) in mask_e.iter().enumerate().filter(|(_, &on)| on) {
            m = m + bundle.h_eps[(i, k)].scale(half);
            let j = bundle.j_eps[(i, k)];
            v = v + j * j;
        }
        if kinds[i] == VarKind::Binary {
            let p = m.max_val(T::c(0.0)).min_val(T::c(1.0));
            m = p;
            v = if mode == PropagationMode::NoVariance {
                S::zero()
            } else {
                p * (S::one() - p)
            };
        } else {
            v = v.max_val(T::c(0.0));
        }
        mean.push(m);
        var.push(v);
    }
    let out = Marginals { mean, var };
    if !out.all_finite() {
        return Err(Error::non_finite(format!(
            "propagated marginals of {}",
            model.name()
        )));
    }
    Ok(out)
}

/// Second-order expected reward of an action marginal in a state marginal.
pub fn expected_reward<T, S, M>(
    model: &M,
    state: &Marginals<S>,
    action: &Marginals<S>,
    mode: PropagationMode,
) -> Result<S>
where
    T: Real,
    S: AdScalar<Base = T>,
    M: Model<T>,
{
    check_arity(model.n_s(), state, "state marginals")?;
    check_arity(model.n_a(), action, "action marginals")?;
    let (mask_s, mask_a, _) = block_masks(mode, state, action, 0);
    let bundle = partials_with_masks(
        &RewardMap::new(model),
        &state.mean,
        &action.mean,
        &[],
        &mask_s,
        &mask_a,
        &[],
    );
    let half = T::c(0.5);
    let mut r = bundle.value[0];
    for (k, _) in mask_s.iter().enumerate().filter(|(_, &on)| on) {
        r = r + (bundle.h_s[(0, k)] * state.var[k]).scale(half);
    }
    for (k, _) in mask_a.iter().enumerate().filter(|(_, &on)| on) {
        r = r + (bundle.h_a[(0, k)] * action.var[k]).scale(half);
    }
    if !num_traits::Float::is_finite(r.value()) {
        return Err(Error::non_finite(format!(
            "expected reward of {}",
            model.name()
        )));
    }
    Ok(r)
}

/// A propagated lookahead: discounted value plus the full marginal trace.
#[derive(Clone, Debug)]
pub struct Rollout<S> {
    /// Discounted sum of per-step expected rewards.
    pub q: S,
    /// Marginals at every depth, `states[0]` being the initial marginal;
    /// length is `actions.len() + 1`.
    pub states: Vec<Marginals<S>>,
    /// Expected reward collected at each depth.
    pub rewards: Vec<S>,
}

/// Propagates an open-loop sequence of action marginals from an initial
/// state marginal and accumulates discounted expected reward. Lookahead
/// never terminates early; termination semantics live in the smooth reward
/// gates of the models.
pub fn rollout<T, S, M>(
    model: &M,
    init: &Marginals<S>,
    actions: &[Marginals<S>],
    mode: PropagationMode,
    discount: T,
) -> Result<Rollout<S>>
where
    T: Real,
    S: AdScalar<Base = T>,
    M: Model<T>,
{
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(init.clone());
    let mut rewards = Vec::with_capacity(actions.len());
    let mut q = S::zero();
    let mut weight = T::c(1.0);
    for (t, action) in actions.iter().enumerate() {
        let state = &states[t];
        let r = expected_reward(model, state, action, mode).map_err(|e| e.at_step(t))?;
        let next = propagate_step(model, state, action, mode).map_err(|e| e.at_step(t))?;
        q = q + r.scale(weight);
        weight = weight * discount;
        rewards.push(r);
        states.push(next);
    }
    Ok(Rollout { q, states, rewards })
}

/// Initial marginal for a concrete simulator state: zero variance on
/// continuous coordinates, Bernoulli variance on binary ones.
pub fn state_marginal<T: Real, M: Model<T>>(model: &M, s: &[T]) -> Marginals<T> {
    let var = model
        .state_kinds()
        .iter()
        .zip(s.iter())
        .map(|(kind, &v)| match kind {
            VarKind::Continuous => T::c(0.0),
            VarKind::Binary => v * (T::c(1.0) - v),
        })
        .collect();
    Marginals {
        mean: s.to_vec(),
        var,
    }
}

/// Serializes a marginal trace as CSV (`step,var,mean,variance`), one row
/// per step and state variable.
pub fn trace_csv<T: Real>(states: &[Marginals<T>], var_names: &[String]) -> String {
    let mut out = String::from("step,var,mean,variance\n");
    for (step, m) in states.iter().enumerate() {
        for (name, (mean, var)) in var_names.iter().zip(m.mean.iter().zip(m.var.iter())) {
            writeln!(out, "{step},{name},{mean},{var}").expect("string write");
        }
    }
    out
}

/// Propagated versus empirical marginals of one state coordinate at one
/// depth.
#[derive(Clone, Copy, Debug)]
pub struct MomentRow {
    pub step: usize,
    pub coord: usize,
    pub prop_mean: f64,
    pub prop_var: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
}

/// Monte Carlo check of the propagated marginals.
///
/// Rolls the smooth transition forward `n_samples` times, drawing actions
/// from uniform distributions with the marginals' means and variances
/// (support `mean +- sqrt(3 v)`) and noise from the standard normal, then
/// reports empirical mean and variance next to the propagated ones for
/// every step and coordinate beyond the initial state.
pub fn compare_to_empirical<T, M, R>(
    model: &M,
    init: &[T],
    actions: &[Marginals<T>],
    mode: PropagationMode,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<MomentRow>>
where
    T: Real,
    M: Model<T>,
    R: Rng + ?Sized,
{
    if n_samples < 2 {
        return Err(Error::InvalidArgument {
            name: "n_samples",
            reason: format!("need at least 2 samples, got {n_samples}"),
        });
    }
    let propagated = rollout(model, &state_marginal(model, init), actions, mode, T::c(1.0))?;
    let n_s = model.n_s();
    let depth = actions.len();
    let mut sums = vec![0.0f64; depth * n_s];
    let mut sq_sums = vec![0.0f64; depth * n_s];

    for _ in 0..n_samples {
        let mut s = init.to_vec();
        for (t, action) in actions.iter().enumerate() {
            let a: Vec<T> = action
                .mean
                .iter()
                .zip(action.var.iter())
                .map(|(&m, &v)| {
                    let half_width = num_traits::Float::sqrt(v * T::c(3.0));
                    let u = rng.random_range(T::c(-1.0)..T::c(1.0));
                    m + u * half_width
                })
                .collect();
            let e: Vec<T> = (0..model.n_eps()).map(|_| T::standard_normal(rng)).collect();
            s = model.transition::<T>(&s, &a, &e);
            for (i, &v) in s.iter().enumerate() {
                let x = v.to_f64c();
                sums[t * n_s + i] += x;
                sq_sums[t * n_s + i] += x * x;
            }
        }
    }

    let n = n_samples as f64;
    let mut rows = Vec::with_capacity(depth * n_s);
    for t in 0..depth {
        for i in 0..n_s {
            let emp_mean = sums[t * n_s + i] / n;
            let emp_var = (sq_sums[t * n_s + i] / n - emp_mean * emp_mean).max(0.0);
            rows.push(MomentRow {
                step: t + 1,
                coord: i,
                prop_mean: propagated.states[t + 1].mean[i].to_f64c(),
                prop_var: propagated.states[t + 1].var[i].to_f64c(),
                emp_mean,
                emp_var,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{value_and_grad, ScalarFn};
    use crate::envs::{make_env, EnvParams, MountainCar, Pendulum, PendulumNoise, SimpleEnv, SuccessKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// Decoupled linear-Gaussian system: each coordinate follows
    /// `s' = a s + b u + c e` independently, so the product-form marginals
    /// are the exact distribution and the recursion
    /// `m' = a m + b m_u`, `v' = a^2 v + b^2 v_u + c^2` is ground truth.
    struct DiagLinear {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
    }

    impl Model<f64> for DiagLinear {
        fn name(&self) -> &'static str {
            "diag_linear"
        }
        fn n_s(&self) -> usize {
            2
        }
        fn n_a(&self) -> usize {
            2
        }
        fn n_eps(&self) -> usize {
            2
        }
        fn action_bounds(&self) -> Vec<(f64, f64)> {
            vec![(-1.0, 1.0); 2]
        }
        fn var_names(&self) -> Vec<String> {
            vec!["s0".into(), "s1".into()]
        }
        fn transition<S: AdScalar<Base = f64>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
            (0..2)
                .map(|i| s[i].scale(self.a[i]) + a[i].scale(self.b[i]) + e[i].scale(self.c[i]))
                .collect()
        }
        fn reward<S: AdScalar<Base = f64>>(&self, s: &[S], a: &[S]) -> S {
            s[0] * s[0] - (a[0] * a[0]).scale(0.1)
        }
        fn is_done(&self, _s: &[f64]) -> bool {
            false
        }
        fn success_kind(&self) -> SuccessKind {
            SuccessKind::NotApplicable
        }
        fn init_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
            vec![0.0, 0.0]
        }
    }

    fn toy() -> DiagLinear {
        DiagLinear {
            a: [0.9, 1.1],
            b: [0.5, -0.3],
            c: [0.2, 0.05],
        }
    }

    fn toy_actions(depth: usize) -> Vec<Marginals<f64>> {
        (0..depth)
            .map(|t| Marginals {
                mean: vec![0.3 - 0.1 * t as f64, -0.2 + 0.05 * t as f64],
                var: vec![0.02, 0.01],
            })
            .collect()
    }

    #[test]
    fn linear_system_is_propagated_exactly() {
        let model = toy();
        let actions = toy_actions(5);
        let init = Marginals {
            mean: vec![1.0, -0.5],
            var: vec![0.0, 0.3],
        };
        let got = rollout(&model, &init, &actions, PropagationMode::Complete, 1.0).unwrap();
        let mut m = [1.0, -0.5];
        let mut v = [0.0, 0.3];
        for (t, act) in actions.iter().enumerate() {
            for i in 0..2 {
                m[i] = model.a[i] * m[i] + model.b[i] * act.mean[i];
                v[i] = model.a[i] * model.a[i] * v[i]
                    + model.b[i] * model.b[i] * act.var[i]
                    + model.c[i] * model.c[i];
                assert_abs_diff_eq!(got.states[t + 1].mean[i], m[i], epsilon = 1e-12);
                assert_abs_diff_eq!(got.states[t + 1].var[i], v[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn no_variance_mode_is_a_plain_mean_rollout() {
        let env = Pendulum::new(0.3, PendulumNoise::ScaledExp);
        let actions: Vec<Marginals<f64>> = (0..8)
            .map(|t| Marginals {
                mean: vec![(t as f64 * 0.7).sin()],
                var: vec![0.04],
            })
            .collect();
        let init = Marginals::point(vec![2.0, 0.5]);
        let got = rollout(&env, &init, &actions, PropagationMode::NoVariance, 1.0).unwrap();
        let mut s = vec![2.0, 0.5];
        let mut q = 0.0;
        for (t, act) in actions.iter().enumerate() {
            q += env.reward::<f64>(&s, &act.mean);
            s = env.transition::<f64>(&s, &act.mean, &[0.0]);
            assert_eq!(got.states[t + 1].mean, s);
            assert!(got.states[t + 1].var.iter().all(|&v| v == 0.0));
        }
        assert_abs_diff_eq!(got.q, q, epsilon = 1e-12);
    }

    #[test]
    fn state_variance_mode_ignores_action_variance_only() {
        let env = Pendulum::new(0.4, PendulumNoise::Additive);
        let init = Marginals::point(vec![1.2, -0.3]);
        let with_av: Vec<Marginals<f64>> = (0..6)
            .map(|t| Marginals {
                mean: vec![0.2 * t as f64 - 0.5],
                var: vec![0.7],
            })
            .collect();
        let zero_av: Vec<Marginals<f64>> = with_av
            .iter()
            .map(|a| Marginals::point(a.mean.clone()))
            .collect();
        let sv = rollout(&env, &init, &with_av, PropagationMode::StateVariance, 1.0).unwrap();
        let complete = rollout(&env, &init, &zero_av, PropagationMode::Complete, 1.0).unwrap();
        assert_abs_diff_eq!(sv.q, complete.q, epsilon = 1e-13);
        for (a, b) in sv.states.iter().zip(complete.states.iter()) {
            for i in 0..2 {
                assert_abs_diff_eq!(a.mean[i], b.mean[i], epsilon = 1e-13);
                assert_abs_diff_eq!(a.var[i], b.var[i], epsilon = 1e-13);
            }
        }
        // And the state variance is genuinely tracked: noise accumulates.
        assert!(sv.states.last().unwrap().var[0] > 1e-4);
    }

    #[test]
    fn skewed_noise_shifts_the_propagated_mean() {
        // x' = x + a + alpha (0.1 e + e^2): the quadratic noise term has
        // expectation alpha, which only the curvature correction can see.
        let alpha = 0.25;
        let env = SimpleEnv::new(alpha);
        let state = Marginals::point(vec![0.0, 0.0]);
        let action = Marginals {
            mean: vec![0.1, 0.2],
            var: vec![0.03, 0.0],
        };
        let next = propagate_step(&env, &state, &action, PropagationMode::Complete).unwrap();
        assert_abs_diff_eq!(next.mean[0], 0.1 + alpha, epsilon = 1e-14);
        assert_abs_diff_eq!(next.mean[1], 0.2, epsilon = 1e-14);
        // var = j_a^2 v_a + j_e^2 at e=0, j_e = 0.1 alpha.
        assert_abs_diff_eq!(
            next.var[0],
            0.03 + (0.1 * alpha) * (0.1 * alpha),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(next.var[1], 0.0, epsilon = 1e-15);
        // The mean-only mode misses the shift.
        let nv = propagate_step(&env, &state, &action, PropagationMode::NoVariance).unwrap();
        assert_abs_diff_eq!(nv.mean[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_reward_expectation_is_exact() {
        // E[s^2] = mu^2 + v and E[-0.1 u^2] = -0.1 (mu^2 + v).
        let model = toy();
        let state = Marginals {
            mean: vec![1.0, 0.0],
            var: vec![0.25, 0.1],
        };
        let action = Marginals {
            mean: vec![0.5, 0.0],
            var: vec![0.04, 0.0],
        };
        let r = expected_reward(&model, &state, &action, PropagationMode::Complete).unwrap();
        assert_abs_diff_eq!(r, 1.25 - 0.1 * (0.25 + 0.04), epsilon = 1e-13);
        let r_sv = expected_reward(&model, &state, &action, PropagationMode::StateVariance).unwrap();
        assert_abs_diff_eq!(r_sv, 1.25 - 0.1 * 0.25, epsilon = 1e-13);
        let r_nv = expected_reward(&model, &state, &action, PropagationMode::NoVariance).unwrap();
        assert_abs_diff_eq!(r_nv, 1.0 - 0.1 * 0.25, epsilon = 1e-13);
    }

    #[test]
    fn gate_reward_expectation_matches_monte_carlo() {
        // At the gate midpoint the sigmoid is odd around zero, so the exact
        // expectation is 50 for any symmetric x distribution; the curvature
        // correction vanishes there too.
        let env = MountainCar::new(0.0, 1.0, 0);
        let state = Marginals {
            mean: vec![0.45, 0.0],
            var: vec![0.0004, 0.0],
        };
        let action = Marginals::point(vec![0.0]);
        let prop = expected_reward(&env, &state, &action, PropagationMode::Complete).unwrap();
        assert_abs_diff_eq!(prop, 50.0, epsilon = 1e-10);

        let mut rng = StdRng::seed_from_u64(123);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = 0.45 + 0.02 * f64::standard_normal(&mut rng);
            sum += env.reward::<f64>(&[x, 0.0], &[0.0]);
        }
        let mc = sum / n as f64;
        assert_abs_diff_eq!(prop, mc, epsilon = 0.25);
    }

    #[test]
    fn binary_coordinate_is_re_marginalized_as_bernoulli() {
        let env = make_env::<f64>("cartpole_hybrid", &EnvParams::default()).unwrap();
        let state = Marginals {
            mean: vec![0.45, 0.4, 0.01, -0.02, 0.0],
            var: vec![0.01, 0.005, 0.001, 0.001, 0.0],
        };
        let action = Marginals {
            mean: vec![0.3],
            var: vec![0.02],
        };
        let next = propagate_step(&env, &state, &action, PropagationMode::Complete).unwrap();
        let p = next.mean[4];
        assert!((0.0..=1.0).contains(&p));
        assert_abs_diff_eq!(next.var[4], p * (1.0 - p), epsilon = 1e-15);
    }

    #[test]
    fn divergence_reports_the_failing_depth() {
        struct Explode;
        impl Model<f64> for Explode {
            fn name(&self) -> &'static str {
                "explode"
            }
            fn n_s(&self) -> usize {
                1
            }
            fn n_a(&self) -> usize {
                1
            }
            fn n_eps(&self) -> usize {
                0
            }
            fn action_bounds(&self) -> Vec<(f64, f64)> {
                vec![(-1.0, 1.0)]
            }
            fn var_names(&self) -> Vec<String> {
                vec!["s".into()]
            }
            fn transition<S: AdScalar<Base = f64>>(&self, s: &[S], _a: &[S], _e: &[S]) -> Vec<S> {
                vec![s[0] * s[0]]
            }
            fn reward<S: AdScalar<Base = f64>>(&self, s: &[S], _a: &[S]) -> S {
                s[0]
            }
            fn is_done(&self, _s: &[f64]) -> bool {
                false
            }
            fn success_kind(&self) -> SuccessKind {
                SuccessKind::NotApplicable
            }
            fn init_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
                vec![2.0]
            }
        }
        // Squaring from 1e80: 1e160 after step 0, overflow applying step 1.
        let init = Marginals::point(vec![1e80]);
        let actions = vec![Marginals::point(vec![0.0]); 3];
        let err = rollout(&Explode, &init, &actions, PropagationMode::NoVariance, 1.0).unwrap_err();
        match err {
            Error::Propagation { step, .. } => assert_eq!(step, 1),
            other => panic!("expected propagation error, got {other}"),
        }
    }

    #[test]
    fn rollout_objective_gradients_flow_through_marginals() {
        // Differentiate E[R] with respect to an action mean and variance:
        // for R = s0^2 - 0.1 u^2 after one linear step from a point state,
        // E[R] = (a m + b mu)^2 + b^2 vu + c^2 - 0.1 (mu^2 + vu), with known
        // gradient (2 b (a m + b mu) - 0.2 mu, b^2 - 0.1).
        struct Objective {
            model: DiagLinear,
        }
        impl ScalarFn<f64> for Objective {
            fn n_inputs(&self) -> usize {
                2
            }
            fn eval<S: AdScalar<Base = f64>>(&self, x: &[S]) -> crate::error::Result<S> {
                let init = Marginals::lift_point(&[1.0, -0.5]);
                let action = Marginals {
                    mean: vec![x[0], S::constant(0.1)],
                    var: vec![x[1], S::zero()],
                };
                let roll = rollout(
                    &self.model,
                    &init,
                    std::slice::from_ref(&action),
                    PropagationMode::Complete,
                    1.0,
                )?;
                // Reward after the step, not at it, so the action's effect
                // on the state distribution is what is differentiated.
                expected_reward(
                    &self.model,
                    &roll.states[1],
                    &Marginals::point(vec![S::zero(), S::zero()]),
                    PropagationMode::Complete,
                )
            }
        }
        let objective = Objective { model: toy() };
        let (mu, vu) = (0.4, 0.05);
        let (val, grad) = value_and_grad(&objective, &[mu, vu]).unwrap();
        let (a, b, c) = (0.9, 0.5, 0.2);
        let m_next = a * 1.0 + b * mu;
        assert_abs_diff_eq!(val, m_next * m_next + b * b * vu + c * c, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], 2.0 * b * m_next, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[1], b * b, epsilon = 1e-12);
    }

    #[test]
    fn trace_csv_lists_every_step_and_variable() {
        let env = SimpleEnv::new(0.1);
        let init = state_marginal(&env, &[0.0, 0.0]);
        let actions = vec![Marginals::point(vec![0.5, 0.25]); 2];
        let roll = rollout(&env, &init, &actions, PropagationMode::Complete, 1.0).unwrap();
        let csv = trace_csv(&roll.states, &env.var_names());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,var,mean,variance");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert_eq!(lines[1], "0,x,0,0");
        assert!(lines[3].starts_with("1,x,0.6"), "line: {}", lines[3]);
    }

    #[test]
    fn empirical_comparison_flags_the_variance_blind_mode() {
        let env = SimpleEnv::new(0.2);
        let actions: Vec<Marginals<f64>> = (0..10)
            .map(|_| Marginals {
                mean: vec![0.3, 0.2],
                var: vec![0.02, 0.01],
            })
            .collect();
        let mut rng = StdRng::seed_from_u64(7);
        let complete = compare_to_empirical(
            &env,
            &[0.0, 0.0],
            &actions,
            PropagationMode::Complete,
            20_000,
            &mut rng,
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let blind = compare_to_empirical(
            &env,
            &[0.0, 0.0],
            &actions,
            PropagationMode::NoVariance,
            20_000,
            &mut rng,
        )
        .unwrap();
        let last_x = |rows: &[MomentRow]| {
            rows.iter()
                .rev()
                .find(|r| r.coord == 0)
                .copied()
                .expect("has rows")
        };
        let c = last_x(&complete);
        let b = last_x(&blind);
        // Same empirical world (same seed), different predictions.
        assert_abs_diff_eq!(c.emp_mean, b.emp_mean, epsilon = 1e-12);
        let c_err = (c.prop_mean - c.emp_mean).abs();
        let b_err = (b.prop_mean - b.emp_mean).abs();
        // The quadratic noise drifts by alpha per step; the full mode tracks
        // it, the mean-only mode misses all of it.
        assert!(c_err < 0.05, "complete error {c_err}");
        assert!(b_err > 1.5, "blind error {b_err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn variances_stay_nonnegative_and_finite(
            theta in -3.0f64..3.0,
            theta_dot in -4.0f64..4.0,
            vs0 in 0.0f64..0.5,
            vs1 in 0.0f64..0.5,
            mu in -2.0f64..2.0,
            vu in 0.0f64..0.3,
        ) {
            let env = Pendulum::new(0.5, PendulumNoise::ScaledExp);
            let state = Marginals { mean: vec![theta, theta_dot], var: vec![vs0, vs1] };
            let action = Marginals { mean: vec![mu], var: vec![vu] };
            for mode in [
                PropagationMode::Complete,
                PropagationMode::NoVariance,
                PropagationMode::StateVariance,
            ] {
                let next = propagate_step(&env, &state, &action, mode).unwrap();
                for i in 0..2 {
                    prop_assert!(next.var[i] >= 0.0);
                    prop_assert!(next.mean[i].is_finite() && next.var[i].is_finite());
                }
            }
        }
    }

    #[test]
    fn repeated_rollouts_are_bitwise_identical() {
        let env = Pendulum::new(0.3, PendulumNoise::ScaledExp);
        let init = Marginals {
            mean: vec![0.7, -0.2],
            var: vec![0.01, 0.02],
        };
        let actions = toy_actions(10)
            .into_iter()
            .map(|m| Marginals {
                mean: vec![m.mean[0]],
                var: vec![m.var[0]],
            })
            .collect::<Vec<_>>();
        let a = rollout(&env, &init, &actions, PropagationMode::Complete, 0.99).unwrap();
        let b = rollout(&env, &init, &actions, PropagationMode::Complete, 0.99).unwrap();
        assert_eq!(a.q, b.q);
        for (x, y) in a.states.iter().zip(b.states.iter()) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.var, y.var);
        }
    }
}
