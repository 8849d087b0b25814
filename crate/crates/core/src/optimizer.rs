//! Gradient-based optimization of stochastic open-loop policies.
//!
//! A policy is one `(mean, variance)` marginal per planned action dimension
//! per lookahead step, stored in normalized coordinates: means in `[-1, 1]`
//! against the action bounds, variances in `[0, (1 - |mean|)^2 / 12]`, the
//! variance of the widest uniform distribution still inside the bounds at
//! that mean. Binary action dimensions carry a Bernoulli probability in the
//! mean slot; their variance is implied (`p (1 - p)`) and the slot is inert.
//!
//! Each planning call runs `n_restarts` independently initialized policies.
//! Every policy row ascends the propagated objective
//! [`rollout`](crate::propagate::rollout) with its own Adam state, under a
//! safe update rule: a candidate step is kept only if it strictly improves
//! the row's objective; otherwise the row and its Adam state are rolled
//! back and the row stops (a rejected step would repeat verbatim). Rows
//! whose objective or gradient turns non-finite are frozen and logged. The
//! best row by final objective wins, with exact ties broken uniformly at
//! random, and the mean of its first action is returned for execution.
//!
//! The winning row can be carried to the next planning call (action
//! saving): it is shifted one step, given a fresh final step, and seeds
//! exactly one restart, leaving the rest of the population exploring.

use crate::autodiff::{value_and_grad_on, AdScalar, ScalarFn, Tape};
use crate::envs::{Model, VarKind};
use crate::error::{Error, Result};
use crate::propagate::{rollout, state_marginal, Marginals, PropagationMode};
use crate::real::Real;
use rand::Rng;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Planner knobs. `depth` is the lookahead horizon; the number of optimized
/// parameters per restart is `2 * depth * n_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig<T> {
    pub depth: usize,
    pub n_restarts: usize,
    /// Gradient update budget per restart.
    pub max_iters: usize,
    /// Adam learning rate, in normalized parameter units.
    pub step_size: T,
    /// A row stops once the largest normalized parameter move of an
    /// accepted update drops to this value or below.
    pub conv_tol: T,
    pub mode: PropagationMode,
    pub discount: T,
    /// Carry the winning row into the next call (shifted, one restart).
    pub save_actions: bool,
}

impl<T: Real> PlannerConfig<T> {
    pub fn new(depth: usize) -> Self {
        PlannerConfig {
            depth,
            n_restarts: 10,
            max_iters: 10,
            step_size: T::c(0.1),
            conv_tol: T::c(0.1),
            mode: PropagationMode::Complete,
            discount: T::c(1.0),
            save_actions: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidArgument { name, reason });
        if self.depth == 0 {
            return bad("depth", "lookahead depth must be at least 1".into());
        }
        if self.n_restarts == 0 {
            return bad("n_restarts", "need at least one restart".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters", "need at least one update iteration".into());
        }
        if !(self.step_size > T::c(0.0)) {
            return bad("step_size", format!("must be positive, got {}", self.step_size));
        }
        if !(self.conv_tol >= T::c(0.0)) {
            return bad("conv_tol", format!("must be nonnegative, got {}", self.conv_tol));
        }
        if !(self.discount > T::c(0.0) && self.discount <= T::c(1.0)) {
            return bad("discount", format!("must be in (0, 1], got {}", self.discount));
        }
        Ok(())
    }
}

/// Largest initial/permissible normalized variance at a given normalized
/// mean: the distance to the nearest bound, squared, over 12.
pub(crate) fn var_cap<T: Real>(mean_norm: T) -> T {
    let w = T::c(1.0) - mean_norm.abs();
    w * w / T::c(12.0)
}

#[inline]
fn mean_idx(t: usize, d: usize, n_a: usize) -> usize {
    2 * (t * n_a + d)
}

/// Precomputed affine map between normalized parameters and raw actions.
struct ActionSpace<T> {
    center: Vec<T>,
    half: Vec<T>,
    kinds: Vec<VarKind>,
}

impl<T: Real> ActionSpace<T> {
    fn new<M: Model<T>>(model: &M) -> Result<Self> {
        let bounds = model.action_bounds();
        let mut center = Vec::with_capacity(bounds.len());
        let mut half = Vec::with_capacity(bounds.len());
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument {
                    name: "action_bounds",
                    reason: format!("dimension {d} has invalid bounds ({lo}, {hi})"),
                });
            }
            center.push((lo + hi) * T::c(0.5));
            half.push((hi - lo) * T::c(0.5));
        }
        Ok(ActionSpace {
            center,
            half,
            kinds: model.action_kinds(),
        })
    }

    fn n_a(&self) -> usize {
        self.center.len()
    }

    /// Denormalizes the marginals of lookahead step `t` from a parameter row.
    fn step_marginals<S: AdScalar<Base = T>>(&self, row: &[S], t: usize) -> Marginals<S> {
        let n_a = self.n_a();
        let mut mean = Vec::with_capacity(n_a);
        let mut var = Vec::with_capacity(n_a);
        for d in 0..n_a {
            let idx = mean_idx(t, d, n_a);
            let m = row[idx].scale(self.half[d]).add_c(self.center[d]);
            let v = match self.kinds[d] {
                VarKind::Continuous => row[idx + 1].scale(self.half[d] * self.half[d]),
                VarKind::Binary => m * (S::one() - m),
            };
            mean.push(m);
            var.push(v);
        }
        Marginals { mean, var }
    }

    /// Raw mean action of step `t` of a concrete parameter row.
    fn step_action(&self, row: &[T], t: usize) -> Vec<T> {
        self.step_marginals::<T>(row, t).mean
    }

    /// Clamps one row back into the feasible normalized set: means into
    /// `[-1, 1]`, then variances into `[0, var_cap(mean)]`. Binary variance
    /// slots are pinned to zero.
    fn project(&self, row: &mut [T], depth: usize) {
        let n_a = self.n_a();
        for t in 0..depth {
            for d in 0..n_a {
                let idx = mean_idx(t, d, n_a);
                row[idx] = num_traits::clamp(row[idx], T::c(-1.0), T::c(1.0));
                row[idx + 1] = match self.kinds[d] {
                    VarKind::Continuous => {
                        num_traits::clamp(row[idx + 1], T::c(0.0), var_cap(row[idx]))
                    }
                    VarKind::Binary => T::c(0.0),
                };
            }
        }
    }

    /// Draws a fresh normalized `(mean, variance)` pair for one dimension.
    fn init_pair<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> (T, T) {
        let mu = rng.random_range(T::c(-1.0)..T::c(1.0));
        match self.kinds[d] {
            VarKind::Continuous => (mu, var_cap(mu)),
            VarKind::Binary => (mu, T::c(0.0)),
        }
    }
}

/// The propagated lookahead objective of one policy row.
struct RowObjective<'a, T: Real, M: Model<T>> {
    model: &'a M,
    init: &'a Marginals<T>,
    space: &'a ActionSpace<T>,
    cfg: &'a PlannerConfig<T>,
}

impl<'a, T: Real, M: Model<T>> ScalarFn<T> for RowObjective<'a, T, M> {
    fn n_inputs(&self) -> usize {
        2 * self.cfg.depth * self.space.n_a()
    }

    fn eval<S: AdScalar<Base = T>>(&self, x: &[S]) -> Result<S> {
        let init = Marginals {
            mean: self.init.mean.iter().map(|&v| S::constant(v)).collect(),
            var: self.init.var.iter().map(|&v| S::constant(v)).collect(),
        };
        let actions: Vec<Marginals<S>> = (0..self.cfg.depth)
            .map(|t| self.space.step_marginals(x, t))
            .collect();
        let roll = rollout(self.model, &init, &actions, self.cfg.mode, self.cfg.discount)?;
        Ok(roll.q)
    }
}

/// Per-row Adam state (ascent).
#[derive(Clone, Debug)]
struct Adam<T> {
    lr: T,
    m: Vec<T>,
    v: Vec<T>,
    t: u32,
}

impl<T: Real> Adam<T> {
    fn new(lr: T, n: usize) -> Self {
        Adam {
            lr,
            m: vec![T::c(0.0); n],
            v: vec![T::c(0.0); n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [T], g: &[T]) {
        self.t += 1;
        let b1 = T::c(ADAM_BETA1);
        let b2 = T::c(ADAM_BETA2);
        let bc1 = T::c(1.0) - num_traits::Float::powi(b1, self.t as i32);
        let bc2 = T::c(1.0) - num_traits::Float::powi(b2, self.t as i32);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (T::c(1.0) - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (T::c(1.0) - b2) * g[i] * g[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i]
                + self.lr * m_hat / (num_traits::Float::sqrt(v_hat) + T::c(ADAM_EPS));
        }
    }
}

/// Largest normalized coordinate move between two rows. Variance slots span
/// `[0, 1/12]`, so their difference is scaled by 12 to compare against the
/// mean slots' `[-1, 1]`.
fn normalized_delta<T: Real>(old: &[T], new: &[T]) -> T {
    let mut worst = T::c(0.0);
    for i in 0..old.len() {
        let diff = (new[i] - old[i]).abs();
        let scaled = if i % 2 == 1 { diff * T::c(12.0) } else { diff };
        worst = worst.max(scaled);
    }
    worst
}

enum UpdateOutcome<T> {
    /// Step kept; new objective value and the normalized move size.
    Accepted { q: T, delta: T },
    /// Step rolled back (no strict improvement, or candidate invalid).
    Rejected,
}

/// One safe projected ascent step on a row: propose with Adam, project into
/// the feasible set, and keep the move only if the objective strictly
/// improves. On rejection both the row and its Adam state are restored, so
/// a rejected row has reached a fixpoint.
fn safe_update<T: Real>(
    row: &mut [T],
    g: &[T],
    adam: &mut Adam<T>,
    q_curr: T,
    space: &ActionSpace<T>,
    depth: usize,
    eval_plain: impl Fn(&[T]) -> Result<T>,
) -> UpdateOutcome<T> {
    let old_row = row.to_vec();
    let old_adam = adam.clone();
    adam.step(row, g);
    space.project(row, depth);
    let candidate_q = eval_plain(row);
    match candidate_q {
        Ok(q) if q > q_curr => {
            let delta = normalized_delta(&old_row, row);
            UpdateOutcome::Accepted { q, delta }
        }
        _ => {
            row.copy_from_slice(&old_row);
            *adam = old_adam;
            UpdateOutcome::Rejected
        }
    }
}

/// The winning policy row of a planning call, reusable as a warm start.
#[derive(Clone, Debug)]
pub struct SavedActions<T> {
    params: Vec<T>,
    depth: usize,
    n_a: usize,
}

/// Everything a planning call decided, for logging and tests.
#[derive(Clone, Debug)]
pub struct PlanDiagnostics<T> {
    /// Per restart: initial objective followed by every accepted value.
    /// Empty for rows frozen before their first evaluation.
    pub q_rows: Vec<Vec<T>>,
    /// Index of the winning restart.
    pub chosen: usize,
    /// Gradient iterations actually run.
    pub iterations: usize,
    /// Restarts disabled by non-finite objectives or gradients.
    pub frozen: usize,
    /// True when no restart produced a usable objective and the returned
    /// action is the bounds midpoint fallback.
    pub degraded: bool,
}

/// Result of one planning call.
#[derive(Clone, Debug)]
pub struct Plan<T> {
    /// Raw action to execute now: the mean of the winning row's first step.
    pub action: Vec<T>,
    pub saved: SavedActions<T>,
    pub diag: PlanDiagnostics<T>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowState {
    Active,
    Converged,
    Frozen,
}

fn init_rows<T: Real, R: Rng + ?Sized>(
    space: &ActionSpace<T>,
    cfg: &PlannerConfig<T>,
    saved: Option<&SavedActions<T>>,
    rng: &mut R,
) -> Vec<Vec<T>> {
    let n_a = space.n_a();
    let n_o = 2 * cfg.depth * n_a;
    let fresh_row = |rng: &mut R| -> Vec<T> {
        let mut row = Vec::with_capacity(n_o);
        for _ in 0..cfg.depth {
            for d in 0..n_a {
                let (m, v) = space.init_pair(d, rng);
                row.push(m);
                row.push(v);
            }
        }
        row
    };
    let mut rows: Vec<Vec<T>> = (0..cfg.n_restarts).map(|_| fresh_row(rng)).collect();
    if let Some(s) = saved {
        if s.depth == cfg.depth && s.n_a == n_a {
            // Shift one step forward and refresh the tail step.
            let stride = 2 * n_a;
            let mut seeded = s.params[stride..].to_vec();
            for d in 0..n_a {
                let (m, v) = space.init_pair(d, rng);
                seeded.push(m);
                seeded.push(v);
            }
            rows[0] = seeded;
        } else {
            log::warn!(
                "saved actions have shape ({}, {}), expected ({}, {}); ignoring",
                s.depth,
                s.n_a,
                cfg.depth,
                n_a
            );
        }
    }
    rows
}

/// Plans one action from a concrete state by restart-parallel safe gradient
/// ascent on the propagated lookahead objective.
pub fn plan_one_step<T, M, R>(
    model: &M,
    state: &[T],
    cfg: &PlannerConfig<T>,
    saved: Option<&SavedActions<T>>,
    rng: &mut R,
) -> Result<Plan<T>>
where
    T: Real,
    M: Model<T>,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if state.len() != model.n_s() {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: model.n_s(),
            got: state.len(),
        });
    }
    let space = ActionSpace::new(model)?;
    let init = state_marginal(model, state);
    let objective = RowObjective {
        model,
        init: &init,
        space: &space,
        cfg,
    };

    let mut rows = init_rows(&space, cfg, saved, rng);
    let n_o = 2 * cfg.depth * space.n_a();
    let mut adams: Vec<Adam<T>> = (0..cfg.n_restarts)
        .map(|_| Adam::new(cfg.step_size, n_o))
        .collect();
    let mut states = vec![RowState::Active; cfg.n_restarts];
    let mut q_curr = vec![T::c(0.0); cfg.n_restarts];
    let mut q_rows: Vec<Vec<T>> = vec![Vec::new(); cfg.n_restarts];

    for r in 0..cfg.n_restarts {
        match objective.eval::<T>(&rows[r]) {
            Ok(q) if num_traits::Float::is_finite(q) => {
                q_curr[r] = q;
                q_rows[r].push(q);
            }
            _ => {
                log::warn!("restart {r} frozen: initial objective not finite");
                states[r] = RowState::Frozen;
            }
        }
    }

    let tape = Tape::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        if states.iter().all(|&s| s != RowState::Active) {
            break;
        }
        iterations += 1;
        for r in 0..cfg.n_restarts {
            if states[r] != RowState::Active {
                continue;
            }
            let g = match value_and_grad_on(&tape, &objective, &rows[r]) {
                Ok((_, g)) => g,
                Err(err) => {
                    log::warn!("restart {r} frozen: {err}");
                    states[r] = RowState::Frozen;
                    continue;
                }
            };
            match safe_update(
                &mut rows[r],
                &g,
                &mut adams[r],
                q_curr[r],
                &space,
                cfg.depth,
                |row| objective.eval::<T>(row),
            ) {
                UpdateOutcome::Accepted { q, delta } => {
                    q_curr[r] = q;
                    q_rows[r].push(q);
                    if delta <= cfg.conv_tol {
                        states[r] = RowState::Converged;
                    }
                }
                UpdateOutcome::Rejected => {
                    states[r] = RowState::Converged;
                }
            }
        }
    }

    let frozen = states.iter().filter(|&&s| s == RowState::Frozen).count();
    let usable: Vec<usize> = (0..cfg.n_restarts)
        .filter(|&r| !q_rows[r].is_empty())
        .collect();
    if usable.is_empty() {
        log::warn!(
            "planning degraded on {}: no restart evaluated; returning bounds midpoint",
            model.name()
        );
        let action = space.center.clone();
        let params = vec![T::c(0.0); n_o];
        return Ok(Plan {
            action,
            saved: SavedActions {
                params,
                depth: cfg.depth,
                n_a: space.n_a(),
            },
            diag: PlanDiagnostics {
                q_rows,
                chosen: 0,
                iterations,
                frozen,
                degraded: true,
            },
        });
    }

    let best_q = usable
        .iter()
        .map(|&r| q_curr[r])
        .fold(T::neg_infinity(), num_traits::Float::max);
    let tied: Vec<usize> = usable.iter().copied().filter(|&r| q_curr[r] == best_q).collect();
    let chosen = tied[rng.random_range(0..tied.len())];

    let action = space.step_action(&rows[chosen], 0);
    Ok(Plan {
        action,
        saved: SavedActions {
            params: rows[chosen].clone(),
            depth: cfg.depth,
            n_a: space.n_a(),
        },
        diag: PlanDiagnostics {
            q_rows,
            chosen,
            iterations,
            frozen,
            degraded: false,
        },
    })
}

/// A sequential decision maker: one action per call, with internal warm
/// starts between calls.
pub trait Planner<T: Real> {
    fn name(&self) -> String;
    fn plan<M: Model<T>, R: Rng + ?Sized>(
        &mut self,
        model: &M,
        state: &[T],
        rng: &mut R,
    ) -> Result<Vec<T>>;
    /// Drops warm-start state at an episode boundary.
    fn reset(&mut self);
    /// Whether the most recent call fell back to a default action because
    /// no restart produced a usable objective.
    fn last_degraded(&self) -> bool {
        false
    }
}

/// The distribution-propagating gradient planner.
#[derive(Clone, Debug)]
pub struct DisprodPlanner<T: Real> {
    pub cfg: PlannerConfig<T>,
    saved: Option<SavedActions<T>>,
    /// Diagnostics of the most recent call.
    pub last: Option<PlanDiagnostics<T>>,
}

impl<T: Real> DisprodPlanner<T> {
    pub fn new(cfg: PlannerConfig<T>) -> Self {
        DisprodPlanner {
            cfg,
            saved: None,
            last: None,
        }
    }
}

impl<T: Real> Planner<T> for DisprodPlanner<T> {
    fn name(&self) -> String {
        match self.cfg.mode {
            PropagationMode::Complete => "disprod".into(),
            PropagationMode::NoVariance => "disprod_nv".into(),
            PropagationMode::StateVariance => "disprod_sv".into(),
        }
    }

    fn plan<M: Model<T>, R: Rng + ?Sized>(
        &mut self,
        model: &M,
        state: &[T],
        rng: &mut R,
    ) -> Result<Vec<T>> {
        let plan = plan_one_step(model, state, &self.cfg, self.saved.as_ref(), rng)?;
        self.saved = if self.cfg.save_actions {
            Some(plan.saved)
        } else {
            None
        };
        self.last = Some(plan.diag);
        Ok(plan.action)
    }

    fn reset(&mut self) {
        self.saved = None;
        self.last = None;
    }

    fn last_degraded(&self) -> bool {
        self.last.as_ref().is_some_and(|d| d.degraded)
    }
}
