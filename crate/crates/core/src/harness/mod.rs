//! Benchmark harness: experiment configuration, seeded episode batches,
//! parameter sweeps, metrics (return statistics, success rate, path-length
//! ratio), and CSV emission.
//!
//! Reproducibility contract: with timing off, identical configs and seeds
//! produce byte-identical CSV output. Episode seeds are pure functions of
//! (base seed, repetition, run), so results are paired across planners and
//! sweep values, and growing the grid never disturbs existing cells.

mod config;
mod episode;
mod experiment;
mod metrics;
mod study;

pub use config::{
    default_depth, default_max_steps, parse_config, parse_config_str, write_config,
    ExperimentSpec, PlannerChoice, Sweep, SweepAxis,
};
pub use episode::{derive_seed, episode_rngs, run_episode, AnyPlanner, EpisodeResult};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use metrics::{
    compute_sl, episodes_csv, mean_std, results_csv, EpisodeRow, MetricsRow, EPISODES_HEADER,
    RESULTS_HEADER,
};
pub use study::{run_distribution_study, StudyRow, StudySpec, STUDY_HEADER};

#[cfg(test)]
mod tests;
