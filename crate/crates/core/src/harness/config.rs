//! Experiment configuration: a TOML file with an `[experiment]` section,
//! optional `[env_params]` and `[sweep]` sections, and optional per-planner
//! tuning sections. Unknown keys are rejected so typos fail loudly, and
//! parse errors keep the deserializer's line/column context.

use crate::baselines::ShootingConfig;
use crate::envs::{EnvParams, CATALOG};
use crate::error::{Error, Result};
use crate::optimizer::PlannerConfig;
use crate::propagate::PropagationMode;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which search strategy drives the episodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerChoice {
    Disprod,
    Cem,
    Mppi,
}

/// The swept parameter. `None` runs the configuration once as-is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    Depth,
    Beta,
    NRedundant,
    Restarts,
    None,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Depth => "depth",
            SweepAxis::Beta => "beta",
            SweepAxis::NRedundant => "n_redundant",
            SweepAxis::Restarts => "restarts",
            SweepAxis::None => "none",
        }
    }

    /// Axes that index discrete quantities only accept whole numbers.
    fn integral(self) -> bool {
        matches!(
            self,
            SweepAxis::Depth | SweepAxis::NRedundant | SweepAxis::Restarts
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A fully resolved experiment: every default has been applied, so two
/// specs that compare equal run identically.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub env: String,
    pub env_params: EnvParams,
    pub planner: PlannerChoice,
    /// Outer repetitions; the paper's protocol averages within a
    /// repetition and reports the spread across repetitions.
    pub repetitions: usize,
    /// Episodes per repetition.
    pub runs: usize,
    pub seed: u64,
    pub max_steps: usize,
    /// Record wall-clock per planning call. Off by default so result files
    /// are reproducible bit for bit across machines.
    pub record_timing: bool,
    pub sweep: Option<Sweep>,
    pub disprod: PlannerConfig<f64>,
    pub cem: ShootingConfig<f64>,
    pub mppi: ShootingConfig<f64>,
}

/// Planning horizon that suits each environment's time scale.
pub fn default_depth(env: &str) -> usize {
    match env {
        "mountain_car" | "mountain_car_sparse" | "mountain_car_highdim" | "dubins" => 100,
        "simple_env" => 20,
        _ => 25,
    }
}

/// Episode cap: navigation episodes get more room than the classic tasks.
pub fn default_max_steps(env: &str) -> usize {
    if env == "dubins" {
        400
    } else {
        200
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    env_params: Option<EnvParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    disprod: Option<RawDisprod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cem: Option<RawShooting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mppi: Option<RawShooting>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    env: String,
    planner: PlannerChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repetitions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    record_timing: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: SweepAxis,
    #[serde(default)]
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisprod {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conv_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<PropagationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    save_actions: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShooting {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elite_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    std_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    save_actions: Option<bool>,
}

fn config_err(origin: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: origin.to_string(),
        reason: reason.into(),
    }
}

/// Parses and resolves a config file. A relative map path is taken
/// relative to the config file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let origin = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| config_err(&origin, format!("read: {e}")))?;
    let mut spec = parse_config_str(&text, &origin)?;
    if let Some(map) = &spec.env_params.map {
        if map.is_relative() {
            if let Some(dir) = path.parent() {
                spec.env_params.map = Some(dir.join(map));
            }
        }
    }
    Ok(spec)
}

/// Parses config text; `origin` labels errors (a path or a test name).
pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| config_err(origin, e.to_string().trim().to_string()))?;
    resolve(raw, origin)
}

fn resolve(raw: RawConfig, origin: &str) -> Result<ExperimentSpec> {
    let exp = raw.experiment;
    let env = exp.env;
    if !CATALOG.contains(&env.as_str()) {
        return Err(config_err(
            origin,
            format!("unknown environment {env:?}; known: {}", CATALOG.join(", ")),
        ));
    }
    let planner = exp.planner;
    let repetitions = exp.repetitions.unwrap_or(8);
    let runs = exp.runs.unwrap_or(6);
    if repetitions == 0 || runs == 0 {
        return Err(config_err(origin, "repetitions and runs must be at least 1"));
    }

    let sweep = match raw.sweep {
        None => None,
        Some(s) if s.axis == SweepAxis::None => {
            if !s.values.is_empty() {
                return Err(config_err(origin, "sweep axis `none` takes no values"));
            }
            None
        }
        Some(s) => {
            if s.values.is_empty() {
                return Err(config_err(origin, "sweep values list must be nonempty"));
            }
            for &v in &s.values {
                if !v.is_finite() || v < 0.0 {
                    return Err(config_err(
                        origin,
                        format!("sweep value {v} out of range for axis {}", s.axis.as_str()),
                    ));
                }
                if s.axis.integral() && v.fract() != 0.0 {
                    return Err(config_err(
                        origin,
                        format!("axis {} needs whole numbers, got {v}", s.axis.as_str()),
                    ));
                }
                if matches!(s.axis, SweepAxis::Depth | SweepAxis::Restarts) && v < 1.0 {
                    return Err(config_err(
                        origin,
                        format!("axis {} needs values >= 1, got {v}", s.axis.as_str()),
                    ));
                }
            }
            Some(Sweep {
                axis: s.axis,
                values: s.values,
            })
        }
    };

    let depth = default_depth(&env);
    let mut disprod = PlannerConfig::<f64>::new(depth);
    if let Some(d) = raw.disprod {
        if let Some(v) = d.depth {
            disprod.depth = v;
        }
        if let Some(v) = d.restarts {
            disprod.n_restarts = v;
        }
        if let Some(v) = d.iterations {
            disprod.max_iters = v;
        }
        if let Some(v) = d.step_size {
            disprod.step_size = v;
        }
        if let Some(v) = d.conv_tol {
            disprod.conv_tol = v;
        }
        if let Some(v) = d.mode {
            disprod.mode = v;
        }
        if let Some(v) = d.discount {
            disprod.discount = v;
        }
        if let Some(v) = d.save_actions {
            disprod.save_actions = v;
        }
    }
    let apply = |mut cfg: ShootingConfig<f64>, raw: Option<RawShooting>| {
        if let Some(s) = raw {
            if let Some(v) = s.depth {
                cfg.depth = v;
            }
            if let Some(v) = s.population {
                cfg.population = v;
            }
            if let Some(v) = s.iterations {
                cfg.iterations = v;
            }
            if let Some(v) = s.elite_frac {
                cfg.elite_frac = v;
            }
            if let Some(v) = s.std_init {
                cfg.std_init = v;
            }
            if let Some(v) = s.sigma {
                cfg.sigma = v;
            }
            if let Some(v) = s.lambda {
                cfg.lambda = v;
            }
            if let Some(v) = s.discount {
                cfg.discount = v;
            }
            if let Some(v) = s.save_actions {
                cfg.save_actions = v;
            }
        }
        cfg
    };
    let mut shooting_default = ShootingConfig::new(depth);
    // On the turning-rate-controlled car a shifted tail keeps steering along
    // the old heading, which drags the sampled population past the goal;
    // start the shooting planners cold there unless the config says otherwise.
    if env == "dubins" {
        shooting_default.save_actions = false;
    }
    let cem = apply(shooting_default.clone(), raw.cem);
    let mppi = apply(shooting_default, raw.mppi);

    let spec = ExperimentSpec {
        id: exp.id.unwrap_or_else(|| {
            format!("{env}-{}", planner_str(planner))
        }),
        env: env.clone(),
        env_params: raw.env_params.unwrap_or_default(),
        planner,
        repetitions,
        runs,
        seed: exp.seed.unwrap_or(0),
        max_steps: exp.max_steps.unwrap_or_else(|| default_max_steps(&env)),
        record_timing: exp.record_timing.unwrap_or(false),
        sweep,
        disprod,
        cem,
        mppi,
    };
    spec.disprod
        .validate()
        .map_err(|e| config_err(origin, format!("[disprod] {e}")))?;
    spec.cem
        .validate()
        .map_err(|e| config_err(origin, format!("[cem] {e}")))?;
    spec.mppi
        .validate()
        .map_err(|e| config_err(origin, format!("[mppi] {e}")))?;
    Ok(spec)
}

fn planner_str(p: PlannerChoice) -> &'static str {
    match p {
        PlannerChoice::Disprod => "disprod",
        PlannerChoice::Cem => "cem",
        PlannerChoice::Mppi => "mppi",
    }
}

/// Serializes a resolved spec with every field explicit, so that parsing
/// the output reproduces the spec structurally.
pub fn write_config(spec: &ExperimentSpec) -> String {
    let raw = RawConfig {
        experiment: RawExperiment {
            id: Some(spec.id.clone()),
            env: spec.env.clone(),
            planner: spec.planner,
            repetitions: Some(spec.repetitions),
            runs: Some(spec.runs),
            seed: Some(spec.seed),
            max_steps: Some(spec.max_steps),
            record_timing: Some(spec.record_timing),
        },
        env_params: Some(spec.env_params.clone()),
        sweep: spec.sweep.as_ref().map(|s| RawSweep {
            axis: s.axis,
            values: s.values.clone(),
        }),
        disprod: Some(RawDisprod {
            depth: Some(spec.disprod.depth),
            restarts: Some(spec.disprod.n_restarts),
            iterations: Some(spec.disprod.max_iters),
            step_size: Some(spec.disprod.step_size),
            conv_tol: Some(spec.disprod.conv_tol),
            mode: Some(spec.disprod.mode),
            discount: Some(spec.disprod.discount),
            save_actions: Some(spec.disprod.save_actions),
        }),
        cem: Some(shooting_raw(&spec.cem)),
        mppi: Some(shooting_raw(&spec.mppi)),
    };
    toml::to_string_pretty(&raw).expect("resolved config serializes")
}

fn shooting_raw(cfg: &ShootingConfig<f64>) -> RawShooting {
    RawShooting {
        depth: Some(cfg.depth),
        population: Some(cfg.population),
        iterations: Some(cfg.iterations),
        elite_frac: Some(cfg.elite_frac),
        std_init: Some(cfg.std_init),
        sigma: Some(cfg.sigma),
        lambda: Some(cfg.lambda),
        discount: Some(cfg.discount),
        save_actions: Some(cfg.save_actions),
    }
}
