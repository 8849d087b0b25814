use super::*;
use crate::envs::{make_env, EnvParams};
use crate::error::Error;
use crate::propagate::PropagationMode;
use approx::assert_abs_diff_eq;

const BASE: &str = r#"
[experiment]
env = "cartpole"
planner = "disprod"
repetitions = 2
runs = 2
seed = 7

[env_params]
alpha = 0.5

[disprod]
depth = 4
restarts = 2
iterations = 2
"#;

#[test]
fn config_defaults_and_round_trip() {
    let spec = parse_config_str(BASE, "test").unwrap();
    assert_eq!(spec.env, "cartpole");
    assert_eq!(spec.id, "cartpole-disprod");
    assert_eq!(spec.planner, PlannerChoice::Disprod);
    assert_eq!(spec.max_steps, 200);
    assert!(!spec.record_timing);
    assert_eq!(spec.disprod.depth, 4);
    assert_eq!(spec.disprod.n_restarts, 2);
    // Untouched sections inherit the environment's default depth.
    assert_eq!(spec.cem.depth, 25);
    assert_eq!(spec.mppi.population, 200);
    assert!(spec.sweep.is_none());

    let text = write_config(&spec);
    let again = parse_config_str(&text, "round-trip").unwrap();
    assert_eq!(again, spec);
}

#[test]
fn config_env_defaults_differ_by_environment() {
    let nav = r#"
[experiment]
env = "dubins"
planner = "cem"
"#;
    let spec = parse_config_str(nav, "test").unwrap();
    assert_eq!(spec.max_steps, 400);
    assert_eq!(spec.cem.depth, 100);
    assert_eq!(spec.repetitions, 8);
    assert_eq!(spec.runs, 6);

    let toy = r#"
[experiment]
env = "simple_env"
planner = "mppi"
"#;
    let spec = parse_config_str(toy, "test").unwrap();
    assert_eq!(spec.max_steps, 200);
    assert_eq!(spec.mppi.depth, 20);
}

#[test]
fn config_errors_name_the_problem_and_location() {
    // Unknown keys are rejected, with the toml line in the message.
    let bad = BASE.replace("alpha = 0.5", "alpa = 0.5");
    let err = parse_config_str(&bad, "typo.toml").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("typo.toml"), "{msg}");
    assert!(msg.contains("alpa"), "{msg}");
    assert!(msg.contains("line"), "{msg}");

    // A missing planner is named.
    let missing = BASE.replace("planner = \"disprod\"\n", "");
    let msg = parse_config_str(&missing, "t").unwrap_err().to_string();
    assert!(msg.contains("planner"), "{msg}");

    // Unknown planner and environment names are rejected.
    let msg = parse_config_str(&BASE.replace("\"disprod\"", "\"rrt\""), "t")
        .unwrap_err()
        .to_string();
    assert!(msg.contains("rrt"), "{msg}");
    let msg = parse_config_str(&BASE.replace("\"cartpole\"", "\"lander\""), "t")
        .unwrap_err()
        .to_string();
    assert!(msg.contains("lander"), "{msg}");

    // Planner sections are validated up front.
    let bad = format!("{BASE}\n[cem]\nelite_frac = 0.0\n");
    let msg = parse_config_str(&bad, "t").unwrap_err().to_string();
    assert!(msg.contains("elite_frac"), "{msg}");
}

#[test]
fn sweep_validation_rejects_bad_values() {
    let with = |sweep: &str| format!("{BASE}\n{sweep}");
    let ok = parse_config_str(
        &with("[sweep]\naxis = \"alpha\"\nvalues = [0.0, 2.5, 5.0]"),
        "t",
    )
    .unwrap();
    assert_eq!(ok.sweep.as_ref().unwrap().values.len(), 3);

    for bad in [
        "[sweep]\naxis = \"alpha\"\nvalues = []",
        "[sweep]\naxis = \"depth\"\nvalues = [2.5]",
        "[sweep]\naxis = \"restarts\"\nvalues = [0]",
        "[sweep]\naxis = \"none\"\nvalues = [1.0]",
        "[sweep]\naxis = \"alpha\"\nvalues = [-1.0]",
    ] {
        assert!(
            parse_config_str(&with(bad), "t").is_err(),
            "accepted: {bad}"
        );
    }

    // Axis none with no values collapses to a plain run.
    let ok = parse_config_str(&with("[sweep]\naxis = \"none\"\nvalues = []"), "t").unwrap();
    assert!(ok.sweep.is_none());
}

#[test]
fn shipped_example_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).expect("configs directory") {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = parse_config(&path).unwrap_or_else(|e| panic!("{e}"));
            // Referenced maps must resolve relative to the config file.
            if let Some(map) = &spec.env_params.map {
                assert!(map.exists(), "missing map {map:?}");
            }
            n += 1;
        }
    }
    assert!(n >= 4, "expected the example configs, found {n}");
}

#[test]
fn path_ratio_matches_geometry() {
    // Straight two-point path: exactly 1.
    let sl = compute_sl(&[(0.0, 0.0), (3.0, 4.0)], (0.0, 0.0), (3.0, 4.0), true);
    assert_eq!(sl, Some(1.0));
    // Right-angle detour with unit legs: 2 / sqrt(2).
    let sl = compute_sl(
        &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)],
        (0.0, 0.0),
        (1.0, 1.0),
        true,
    )
    .unwrap();
    assert_abs_diff_eq!(sl, 2.0 / 2.0f64.sqrt(), epsilon = 1e-12);
    // Failures and degenerate geometry are excluded, not zeroed.
    assert_eq!(
        compute_sl(&[(0.0, 0.0), (1.0, 1.0)], (0.0, 0.0), (1.0, 1.0), false),
        None
    );
    assert_eq!(
        compute_sl(&[(2.0, 2.0), (2.0, 2.0)], (2.0, 2.0), (2.0, 2.0), true),
        None
    );
}

#[test]
fn seed_derivation_is_stable_and_order_sensitive() {
    // Pure function: same triple, same seed.
    assert_eq!(derive_seed(42, 3, 5), derive_seed(42, 3, 5));
    // Extending the grid cannot move existing cells.
    let before: Vec<u64> = (0..4).map(|m| derive_seed(9, 2, m)).collect();
    let after: Vec<u64> = (0..8).map(|m| derive_seed(9, 2, m)).collect();
    assert_eq!(before[..], after[..4]);
    // Repetition and run indices are not interchangeable.
    assert_ne!(derive_seed(9, 2, 5), derive_seed(9, 5, 2));
    // Different bases decorrelate.
    assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
}

/// A small, fast experiment used by the execution tests.
fn tiny_spec(planner: &str, env: &str) -> ExperimentSpec {
    let text = format!(
        r#"
[experiment]
env = "{env}"
planner = "{planner}"
repetitions = 2
runs = 2
seed = 11
max_steps = 12

[env_params]
alpha = 0.3

[disprod]
depth = 3
restarts = 2
iterations = 2

[cem]
depth = 3
population = 12
iterations = 2

[mppi]
depth = 3
population = 12
iterations = 2
"#
    );
    parse_config_str(&text, "tiny").unwrap()
}

#[test]
fn experiment_runs_and_aggregates() {
    let out = run_experiment(&tiny_spec("cem", "cartpole")).unwrap();
    assert!(!out.partial);
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.episodes.len(), 4);
    let row = &out.rows[0];
    assert_eq!(row.planner, "cem");
    assert_eq!(row.axis, "none");
    assert_eq!(row.value, None);
    // CartPole has a survive-to-cap success notion, so SR is present.
    let sr = row.sr.unwrap();
    assert!((0.0..=100.0).contains(&sr));
    // No planar goal: SL is absent. Timing off: wall_ms is zero.
    assert_eq!(row.sl, None);
    assert_eq!(row.wall_ms, 0.0);
    assert!(row.mean_steps <= 12.0);
    // Episode seeds follow the documented derivation.
    assert_eq!(out.episodes[0].seed, derive_seed(11, 0, 0));
    assert_eq!(out.episodes[3].seed, derive_seed(11, 1, 1));
}

#[test]
fn single_episode_experiment_has_zero_std() {
    let mut spec = tiny_spec("mppi", "pendulum");
    spec.repetitions = 1;
    spec.runs = 1;
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.rows[0].std_return, 0.0);
    // Pendulum has no success notion.
    assert_eq!(out.rows[0].sr, None);
}

#[test]
fn sweeps_emit_one_row_per_value_with_paired_seeds() {
    let mut spec = tiny_spec("cem", "cartpole");
    spec.sweep = Some(Sweep {
        axis: SweepAxis::Alpha,
        values: vec![0.0, 1.0],
    });
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.rows.len(), 2);
    assert_eq!(out.rows[0].axis, "alpha");
    assert_eq!(out.rows[0].value, Some(0.0));
    assert_eq!(out.rows[1].value, Some(1.0));
    // The same (repetition, run) cell sees the same seed at every value.
    let seeds_at = |v: f64| -> Vec<u64> {
        out.episodes
            .iter()
            .filter(|e| e.value == Some(v))
            .map(|e| e.seed)
            .collect()
    };
    assert_eq!(seeds_at(0.0), seeds_at(1.0));
}

#[test]
fn depth_sweep_reaches_planner_configs() {
    let mut spec = tiny_spec("disprod", "pendulum");
    spec.sweep = Some(Sweep {
        axis: SweepAxis::Depth,
        values: vec![2.0, 4.0],
    });
    spec.repetitions = 1;
    spec.runs = 1;
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.rows.len(), 2);
    // Different depths genuinely change planning: the episode returns at
    // the two values differ despite identical seeds.
    assert_ne!(out.episodes[0].ret, out.episodes[1].ret);
}

#[test]
fn broken_axis_value_marks_partial_but_keeps_the_rest() {
    // A dubins run with a missing map file cannot build its environment.
    let mut spec = tiny_spec("cem", "dubins");
    spec.env_params.map = Some(std::path::PathBuf::from("/nonexistent/map.toml"));
    let out = run_experiment(&spec).unwrap();
    assert!(out.partial);
    assert!(out.rows.is_empty());
    assert!(out.episodes.is_empty());
}

#[test]
fn identical_specs_produce_identical_csv_bytes() {
    let spec = tiny_spec("mppi", "cartpole");
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(results_csv(&a.rows), results_csv(&b.rows));
    assert_eq!(episodes_csv(&a.episodes), episodes_csv(&b.episodes));
    assert!(results_csv(&a.rows).starts_with(RESULTS_HEADER));
    assert!(episodes_csv(&a.episodes).starts_with(EPISODES_HEADER));
}

#[test]
fn empty_rows_give_header_only_files() {
    assert_eq!(results_csv(&[]), format!("{RESULTS_HEADER}\n"));
    assert_eq!(episodes_csv(&[]), format!("{EPISODES_HEADER}\n"));
}

#[test]
fn nav_experiment_reports_path_ratio() {
    // A short dubins run on the default open map; successes may or may not
    // happen in 40 steps, but when they do SL must be at least 1.
    let text = r#"
[experiment]
env = "dubins"
planner = "cem"
repetitions = 1
runs = 2
seed = 3
max_steps = 40

[cem]
depth = 12
population = 30
iterations = 3
"#;
    let spec = parse_config_str(text, "nav").unwrap();
    let out = run_experiment(&spec).unwrap();
    let row = &out.rows[0];
    assert!(row.sr.is_some());
    if let Some(sl) = row.sl {
        assert!(sl >= 1.0, "path ratio {sl} beats the straight line");
    }
}

#[test]
fn study_rows_cover_both_modes_and_reproduce() {
    let spec = StudySpec {
        env: "simple_env".into(),
        alphas: vec![0.0, 0.2],
        depth: 5,
        n_samples: 2000,
        seed: 17,
    };
    let (rows, csv) = run_distribution_study(&spec).unwrap();
    // 2 alphas x 2 modes x 5 steps x 2 coordinates.
    assert_eq!(rows.len(), 2 * 2 * 5 * 2);
    assert!(csv.starts_with(STUDY_HEADER));
    let (_, csv2) = run_distribution_study(&spec).unwrap();
    assert_eq!(csv, csv2);

    // The empirical columns are mode-independent by construction.
    let emp = |mode: PropagationMode, alpha: f64| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.mode == mode && r.alpha == alpha)
            .map(|r| (r.row.emp_mean, r.row.emp_var))
            .collect()
    };
    assert_eq!(
        emp(PropagationMode::Complete, 0.2),
        emp(PropagationMode::NoVariance, 0.2)
    );

    // At the noisy scale, the complete mode tracks the terminal mean
    // better than the mean-only ablation.
    let terminal_err = |mode: PropagationMode| -> f64 {
        rows.iter()
            .filter(|r| r.mode == mode && r.alpha == 0.2 && r.row.step == 5)
            .map(|r| (r.row.prop_mean - r.row.emp_mean).abs())
            .sum()
    };
    assert!(
        terminal_err(PropagationMode::Complete) < terminal_err(PropagationMode::NoVariance),
        "complete {} vs no-variance {}",
        terminal_err(PropagationMode::Complete),
        terminal_err(PropagationMode::NoVariance)
    );
}

#[test]
fn study_rejects_unsupported_environments() {
    let spec = StudySpec {
        env: "cartpole".into(),
        alphas: vec![0.1],
        depth: 3,
        n_samples: 100,
        seed: 0,
    };
    assert!(matches!(
        run_distribution_study(&spec),
        Err(Error::InvalidArgument { name: "env", .. })
    ));
}

#[test]
fn episode_runner_metadata_is_consistent() {
    let env = make_env::<f64>(
        "mountain_car",
        &EnvParams {
            alpha: 0.0,
            ..EnvParams::default()
        },
    )
    .unwrap();
    let mut planner = AnyPlanner::Cem(crate::baselines::CemPlanner::new({
        let mut c = crate::baselines::ShootingConfig::new(3);
        c.population = 10;
        c.iterations = 2;
        c
    }));
    let ep = run_episode(&env, &mut planner, 15, 99, false).unwrap();
    assert_eq!(ep.trajectory.len(), ep.steps + 1);
    assert!(ep.steps <= 15);
    // Mountain car success means reaching the goal, which a 15-step budget
    // with a depth-3 lookahead cannot do from the valley floor.
    assert_eq!(ep.success, Some(false));
    assert_eq!(ep.mean_plan_ms, 0.0);
    assert!(!ep.degraded);
}
