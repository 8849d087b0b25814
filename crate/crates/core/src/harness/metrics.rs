//! Result rows and CSV serialization.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! deterministic, so identical runs produce byte-identical files. Metrics
//! that do not apply (success rate without a success notion, path ratio
//! without successes) are left as empty cells rather than fake zeros.

use std::fmt::Write as _;

/// Aggregate over one (axis value, planner) cell of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub experiment_id: String,
    /// Swept parameter name, or "none".
    pub axis: String,
    /// Swept parameter value; absent without a sweep.
    pub value: Option<f64>,
    pub planner: String,
    /// Mean episode return over all episodes of the cell.
    pub mean_return: f64,
    /// Spread of the per-repetition mean returns (population std); 0 for a
    /// single repetition.
    pub std_return: f64,
    /// Success percentage in [0, 100]; absent when not applicable.
    pub sr: Option<f64>,
    /// Mean path-length ratio over successful episodes; absent when
    /// undefined for the environment or when nothing succeeded.
    pub sl: Option<f64>,
    pub mean_steps: f64,
    /// Mean wall-clock per planning call, ms; 0 when timing is off.
    pub wall_ms: f64,
}

pub const RESULTS_HEADER: &str =
    "experiment_id,axis,value,planner,mean_return,std_return,sr,sl,mean_steps,wall_ms";

/// Record of a single episode, for the companion episodes file.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRow {
    pub experiment_id: String,
    pub axis: String,
    pub value: Option<f64>,
    pub planner: String,
    pub repetition: usize,
    pub run: usize,
    pub seed: u64,
    pub ret: f64,
    pub steps: usize,
    pub success: Option<bool>,
    pub degraded: bool,
    pub plan_ms: f64,
}

pub const EPISODES_HEADER: &str =
    "experiment_id,axis,value,planner,repetition,run,seed,return,steps,success,degraded,plan_ms";

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment_id,
            r.axis,
            opt_f64(r.value),
            r.planner,
            r.mean_return,
            r.std_return,
            opt_f64(r.sr),
            opt_f64(r.sl),
            r.mean_steps,
            r.wall_ms
        )
        .expect("write to string");
    }
    out
}

pub fn episodes_csv(rows: &[EpisodeRow]) -> String {
    let mut out = String::from(EPISODES_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment_id,
            r.axis,
            opt_f64(r.value),
            r.planner,
            r.repetition,
            r.run,
            r.seed,
            r.ret,
            r.steps,
            r.success.map(|s| s.to_string()).unwrap_or_default(),
            r.degraded,
            r.plan_ms
        )
        .expect("write to string");
    }
    out
}

/// Path-length ratio of a successful planar trajectory: traversed length
/// over the straight-line distance from start to goal. Undefined (`None`)
/// for failures and for degenerate start-at-goal episodes.
///
/// Episodes may legitimately stop short of the goal point (inside a goal
/// radius), so the leftover gap from the final state to the goal is
/// counted as part of the path; by the triangle inequality the ratio is
/// then always at least 1.
pub fn compute_sl(
    trajectory: &[(f64, f64)],
    start: (f64, f64),
    goal: (f64, f64),
    success: bool,
) -> Option<f64> {
    if !success {
        return None;
    }
    let dist = |a: (f64, f64), b: (f64, f64)| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let base = dist(start, goal);
    if base < 1e-9 {
        log::warn!("path ratio undefined: start coincides with goal");
        return None;
    }
    let traversed: f64 = trajectory.windows(2).map(|w| dist(w[0], w[1])).sum();
    let leftover = trajectory.last().map_or(0.0, |&p| dist(p, goal));
    Some((traversed + leftover) / base)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
