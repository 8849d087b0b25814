//! Batch execution: sweep axis application, seeded repetition/run loops,
//! and aggregation into metrics rows.

use super::config::{ExperimentSpec, PlannerChoice, SweepAxis};
use super::episode::{derive_seed, run_episode, AnyPlanner};
use super::metrics::{compute_sl, mean_std, EpisodeRow, MetricsRow};
use crate::baselines::{CemPlanner, MppiPlanner, ShootingConfig};
use crate::envs::{make_env, EnvModel, EnvParams, Model};
use crate::error::Result;
use crate::optimizer::{DisprodPlanner, Planner, PlannerConfig};

/// Everything an experiment produces. `partial` marks that at least one
/// axis value was cut short by an episode failure (its metrics row is
/// withheld; episodes finished before the failure are still listed).
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeRow>,
    pub partial: bool,
}

/// One sweep point: the spec's parameters with the axis value applied.
struct AxisPoint {
    value: Option<f64>,
    params: EnvParams,
    disprod: PlannerConfig<f64>,
    cem: ShootingConfig<f64>,
    mppi: ShootingConfig<f64>,
}

fn axis_points(spec: &ExperimentSpec) -> Vec<AxisPoint> {
    let base = AxisPoint {
        value: None,
        params: spec.env_params.clone(),
        disprod: spec.disprod.clone(),
        cem: spec.cem.clone(),
        mppi: spec.mppi.clone(),
    };
    let Some(sweep) = &spec.sweep else {
        return vec![base];
    };
    sweep
        .values
        .iter()
        .map(|&v| {
            let mut p = AxisPoint {
                value: Some(v),
                params: spec.env_params.clone(),
                disprod: spec.disprod.clone(),
                cem: spec.cem.clone(),
                mppi: spec.mppi.clone(),
            };
            match sweep.axis {
                SweepAxis::Alpha => p.params.alpha = v,
                SweepAxis::Beta => p.params.beta = Some(v),
                SweepAxis::NRedundant => p.params.n_redundant = Some(v as usize),
                SweepAxis::Depth => {
                    p.disprod.depth = v as usize;
                    p.cem.depth = v as usize;
                    p.mppi.depth = v as usize;
                }
                SweepAxis::Restarts => p.disprod.n_restarts = v as usize,
                SweepAxis::None => {}
            }
            p
        })
        .collect()
}

fn build_planner(spec: &ExperimentSpec, point: &AxisPoint) -> AnyPlanner<f64> {
    match spec.planner {
        PlannerChoice::Disprod => AnyPlanner::Disprod(DisprodPlanner::new(point.disprod.clone())),
        PlannerChoice::Cem => AnyPlanner::Cem(CemPlanner::new(point.cem.clone())),
        PlannerChoice::Mppi => AnyPlanner::Mppi(MppiPlanner::new(point.mppi.clone())),
    }
}

/// Runs the full grid: for each axis value, `repetitions x runs` episodes
/// with seeds derived from (base seed, repetition, run). An episode error
/// aborts only its axis value.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let axis_name = spec
        .sweep
        .as_ref()
        .map(|s| s.axis.as_str())
        .unwrap_or("none");
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    let mut partial = false;

    for point in axis_points(spec) {
        let env: EnvModel<f64> = match make_env(&spec.env, &point.params) {
            Ok(env) => env,
            Err(e) => {
                log::error!(
                    "{}: axis {axis_name}={:?}: environment construction failed: {e}",
                    spec.id,
                    point.value
                );
                partial = true;
                continue;
            }
        };
        let mut planner = build_planner(spec, &point);
        let planner_name = planner.name();
        let goal = env.goal_xy();
        let xy = env.xy_indices();

        let mut results = Vec::new();
        let mut aborted = false;
        'reps: for r in 0..spec.repetitions {
            for m in 0..spec.runs {
                let seed = derive_seed(spec.seed, r as u64, m as u64);
                match run_episode(&env, &mut planner, spec.max_steps, seed, spec.record_timing) {
                    Ok(ep) => {
                        episodes.push(EpisodeRow {
                            experiment_id: spec.id.clone(),
                            axis: axis_name.to_string(),
                            value: point.value,
                            planner: planner_name.clone(),
                            repetition: r,
                            run: m,
                            seed,
                            ret: ep.ret,
                            steps: ep.steps,
                            success: ep.success,
                            degraded: ep.degraded,
                            plan_ms: ep.mean_plan_ms,
                        });
                        results.push((r, ep));
                    }
                    Err(e) => {
                        log::error!(
                            "{}: axis {axis_name}={:?}, repetition {r}, run {m}: {e}",
                            spec.id,
                            point.value
                        );
                        partial = true;
                        aborted = true;
                        break 'reps;
                    }
                }
            }
        }
        if aborted || results.is_empty() {
            continue;
        }

        let returns: Vec<f64> = results.iter().map(|(_, ep)| ep.ret).collect();
        let (mean_return, _) = mean_std(&returns);
        let rep_means: Vec<f64> = (0..spec.repetitions)
            .map(|r| {
                let reps: Vec<f64> = results
                    .iter()
                    .filter(|(rr, _)| *rr == r)
                    .map(|(_, ep)| ep.ret)
                    .collect();
                mean_std(&reps).0
            })
            .collect();
        let std_return = mean_std(&rep_means).1;

        let flags: Vec<bool> = results
            .iter()
            .filter_map(|(_, ep)| ep.success)
            .collect();
        let sr = (!flags.is_empty())
            .then(|| 100.0 * flags.iter().filter(|&&s| s).count() as f64 / flags.len() as f64);

        let sl = match (xy, goal) {
            (Some((ix, iy)), Some((gx, gy))) => {
                let ratios: Vec<f64> = results
                    .iter()
                    .filter_map(|(_, ep)| {
                        let traj: Vec<(f64, f64)> =
                            ep.trajectory.iter().map(|s| (s[ix], s[iy])).collect();
                        compute_sl(&traj, traj[0], (gx, gy), ep.success == Some(true))
                    })
                    .collect();
                (!ratios.is_empty()).then(|| mean_std(&ratios).0)
            }
            _ => None,
        };

        let steps: Vec<f64> = results.iter().map(|(_, ep)| ep.steps as f64).collect();
        let plan_ms: Vec<f64> = results.iter().map(|(_, ep)| ep.mean_plan_ms).collect();
        rows.push(MetricsRow {
            experiment_id: spec.id.clone(),
            axis: axis_name.to_string(),
            value: point.value,
            planner: planner_name.clone(),
            mean_return,
            std_return,
            sr,
            sl,
            mean_steps: mean_std(&steps).0,
            wall_ms: mean_std(&plan_ms).0,
        });
    }

    Ok(ExperimentOutcome {
        rows,
        episodes,
        partial,
    })
}
