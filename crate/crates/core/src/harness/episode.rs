//! Seed derivation and single-episode execution.
//!
//! Every episode's randomness is a pure function of (base seed, repetition,
//! run), so planners and sweep values see identical environment draws:
//! adding repetitions or runs never perturbs earlier episodes.

use crate::baselines::{CemPlanner, MppiPlanner};
use crate::envs::{step_sim, Model, SuccessKind};
use crate::error::Result;
use crate::optimizer::{DisprodPlanner, Planner};
use crate::real::Real;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// splitmix64: cheap, well-mixed u64 -> u64 hash.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Episode seed for repetition `r`, run `m`. Chained hashing keeps the
/// function order-sensitive: (r, m) and (m, r) land on different seeds.
pub fn derive_seed(base: u64, r: u64, m: u64) -> u64 {
    let h = splitmix64(base);
    let h = splitmix64(h ^ r.wrapping_add(1));
    splitmix64(h ^ m.wrapping_add(2))
}

const ENV_STREAM: u64 = 0x5B1C_E873_29AD_11F0;
const PLAN_STREAM: u64 = 0xA30F_77C4_D8E2_6B91;

/// Splits one episode seed into independent environment and planner
/// streams, so a planner's sampling appetite cannot perturb the
/// environment's noise sequence.
pub fn episode_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    (
        ChaCha8Rng::seed_from_u64(splitmix64(seed ^ ENV_STREAM)),
        ChaCha8Rng::seed_from_u64(splitmix64(seed ^ PLAN_STREAM)),
    )
}

/// One of the three planner families, chosen at runtime.
#[derive(Clone, Debug)]
pub enum AnyPlanner<T: Real> {
    Disprod(DisprodPlanner<T>),
    Cem(CemPlanner<T>),
    Mppi(MppiPlanner<T>),
}

impl<T: Real> Planner<T> for AnyPlanner<T> {
    fn name(&self) -> String {
        match self {
            AnyPlanner::Disprod(p) => p.name(),
            AnyPlanner::Cem(p) => p.name(),
            AnyPlanner::Mppi(p) => p.name(),
        }
    }

    fn plan<M: Model<T>, R: Rng + ?Sized>(
        &mut self,
        model: &M,
        state: &[T],
        rng: &mut R,
    ) -> Result<Vec<T>> {
        match self {
            AnyPlanner::Disprod(p) => p.plan(model, state, rng),
            AnyPlanner::Cem(p) => p.plan(model, state, rng),
            AnyPlanner::Mppi(p) => p.plan(model, state, rng),
        }
    }

    fn reset(&mut self) {
        match self {
            AnyPlanner::Disprod(p) => p.reset(),
            AnyPlanner::Cem(p) => p.reset(),
            AnyPlanner::Mppi(p) => p.reset(),
        }
    }

    fn last_degraded(&self) -> bool {
        match self {
            AnyPlanner::Disprod(p) => p.last_degraded(),
            AnyPlanner::Cem(p) => p.last_degraded(),
            AnyPlanner::Mppi(p) => p.last_degraded(),
        }
    }
}

/// Everything measured about one episode.
#[derive(Clone, Debug)]
pub struct EpisodeResult {
    /// Undiscounted return: the sum of simulator rewards.
    pub ret: f64,
    /// Planning calls taken (= environment steps).
    pub steps: usize,
    /// `None` when the environment has no success notion.
    pub success: Option<bool>,
    /// True if any planning call fell back to a default action.
    pub degraded: bool,
    /// Steps on which the planned action needed clamping.
    pub clamped_steps: usize,
    /// Visited states, including the initial one (`steps + 1` entries).
    pub trajectory: Vec<Vec<f64>>,
    /// Mean wall-clock per planning call, ms; 0 unless timing is recorded.
    pub mean_plan_ms: f64,
}

/// Runs one seeded episode: reset the planner, draw the initial state,
/// then alternate planning and simulation until termination or the cap.
pub fn run_episode<M: Model<f64>, P: Planner<f64>>(
    model: &M,
    planner: &mut P,
    max_steps: usize,
    seed: u64,
    record_timing: bool,
) -> Result<EpisodeResult> {
    let (mut rng_env, mut rng_plan) = episode_rngs(seed);
    planner.reset();
    let mut state = model.init_state(&mut rng_env);
    let mut trajectory = vec![state.clone()];
    let mut ret = 0.0;
    let mut steps = 0;
    let mut clamped_steps = 0;
    let mut degraded = false;
    let mut reached_done = false;
    let mut plan_ns: u128 = 0;

    for _ in 0..max_steps {
        let t0 = record_timing.then(Instant::now);
        let action = planner.plan(model, &state, &mut rng_plan)?;
        if let Some(t0) = t0 {
            plan_ns += t0.elapsed().as_nanos();
        }
        degraded |= planner.last_degraded();
        let step = step_sim(model, &state, &action, &mut rng_env)?;
        ret += step.reward;
        steps += 1;
        if step.clamped {
            clamped_steps += 1;
        }
        state = step.next;
        trajectory.push(state.clone());
        if step.done {
            reached_done = true;
            break;
        }
    }

    let success = match model.success_kind() {
        SuccessKind::Survive => Some(!reached_done),
        SuccessKind::Reach => Some(reached_done),
        SuccessKind::NotApplicable => None,
    };
    Ok(EpisodeResult {
        ret,
        steps,
        success,
        degraded,
        clamped_steps,
        trajectory,
        mean_plan_ms: if record_timing && steps > 0 {
            plan_ns as f64 / 1e6 / steps as f64
        } else {
            0.0
        },
    })
}
