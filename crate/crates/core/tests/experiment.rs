use std::path::{Path, PathBuf};

use pavd_core::experiment::{
    read_trajectory_csv, run_experiment, simulate_trajectories, summary_json, write_plot_data, write_summary_csv,
    write_trajectory_csv, ExperimentConfig, ExperimentError, Grid, Mode, DEFAULT_REPLICATES,
};
use pavd_core::rates::{fixtures, Regime};
use proptest::prelude::*;
use serde_json::Value;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/examples").join(name)
}

fn config(json: &str) -> Result<ExperimentConfig, ExperimentError> {
    ExperimentConfig::from_json(json, Path::new("."))
}

#[test]
fn minimal_config_gets_defaults() {
    let c = config(r#"{"fixture": "constant_2_1", "n_grid": [1000, 5000]}"#).unwrap();
    assert_eq!(c.replicates, DEFAULT_REPLICATES);
    assert_eq!(DEFAULT_REPLICATES, 100);
    assert_eq!(c.observer_stride, 50);
    assert_eq!(c.mode, Mode::Discrete);
    assert!(c.condition_on_survival);
    assert_eq!(c.grid, Grid::Sizes(vec![1000, 5000]));
}

#[test]
fn bad_configs_are_rejected() {
    for bad in [
        r#"{"fixture": "constant_2_1", "n_grid": [1000, 1000]}"#,
        r#"{"fixture": "constant_2_1", "n_grid": [1000], "replicates": 0}"#,
        r#"{"fixture": "constant_2_1", "n_grid": [1000], "colour": 1}"#,
        r#"{"fixture": "nope", "n_grid": [1000]}"#,
        r#"{"n_grid": [1000]}"#,
        r#"{"fixture": "constant_2_1", "t_grid": [1.0]}"#,
        r#"{"fixture": "constant_2_1", "n_grid": [10"#,
    ] {
        assert!(
            matches!(
                config(bad),
                Err(ExperimentError::Invalid { .. } | ExperimentError::Parse { .. })
            ),
            "{bad}"
        );
    }
    let Err(ExperimentError::Parse { line, .. }) = config("{\n\"fixture\": 3}") else {
        panic!()
    };
    assert_eq!(line, 2);
}

#[test]
fn shipped_configs_parse() {
    let c = ExperimentConfig::from_path(&shipped("rich_die_young_1.json")).unwrap();
    assert_eq!(
        pavd_core::rates::assumption_report(&c.model).regime,
        Regime::RichDieYoung
    );
    assert_eq!(c.model, fixtures::rich_die_young_1());
    for name in [
        "constant_2_1.json",
        "linear_geometric_death.json",
        "rich_are_old_cmj.json",
        "quickstart.json",
    ] {
        ExperimentConfig::from_path(&shipped(name)).unwrap();
    }
}

#[test]
fn no_death_keeps_the_root_oldest() {
    let c = config(r#"{"model": {"b": {"family": "constant", "value": 1}, "d": {"family": "constant", "value": 0}}, "n_grid": [100, 2000], "replicates": 10}"#).unwrap();
    let out = run_experiment(&c).unwrap();
    assert!(out.rows.iter().all(|r| r.o_n == Some(1) && r.survived));
    for row in &out.summary.rows {
        assert_eq!(row.survival_fraction, 1.0);
        assert_eq!(row.estimated["O_exponent"].unwrap().mean, 0.0);
    }
}

#[test]
fn summary_json_has_predictions() {
    let c = config(r#"{"fixture": "constant_2_1", "n_grid": [500, 2000], "replicates": 20, "base_seed": 4}"#).unwrap();
    let v: Value = serde_json::from_str(&summary_json(&run_experiment(&c).unwrap().summary)).unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert!((row["predicted"]["O_exponent"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert!(row["estimated"]["O_exponent"]["mean"].is_f64());
    }
    assert!((v["lambda_star"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn predicted_observables_are_estimated() {
    for json in [
        r#"{"fixture": "rich_die_young_1", "n_grid": [100, 1000], "replicates": 10}"#,
        r#"{"fixture": "rich_are_old", "mode": "cmj", "n_grid": [100, 1000], "replicates": 10}"#,
        r#"{"fixture": "rich_are_old", "mode": "cmj", "t_grid": [1.0, 3.0], "replicates": 10}"#,
    ] {
        let s = run_experiment(&config(json).unwrap()).unwrap().summary;
        for row in &s.rows {
            assert!(!row.predicted.is_empty());
            for k in row.predicted.keys() {
                assert!(row.estimated.contains_key(k), "{k} in {json}");
            }
        }
    }
}

#[test]
fn empty_survivor_set() {
    let c = config(r#"{"model": {"b": {"family": "constant", "value": 1}, "d": {"family": "constant", "value": 4}}, "n_grid": [200], "replicates": 20}"#).unwrap();
    let s = run_experiment(&c).unwrap().summary;
    let row = &s.rows[0];
    assert_eq!((row.survivor_count, row.survival_fraction), (0, 0.0));
    assert!(row.estimated.values().all(Option::is_none));
    assert_eq!(row.median_io_ratio, None);
    let v: Value = serde_json::from_str(&summary_json(&s)).unwrap();
    assert!(v["rows"][0]["estimated"]["O_exponent"].is_null());
    let mut csv = Vec::new();
    write_summary_csv(&s, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 2);
}

#[test]
fn trajectory_csv_round_trips() {
    for (mode, n) in [(Mode::Discrete, 3_000), (Mode::Cmj, 3_000)] {
        let rows = simulate_trajectories(&fixtures::rich_are_old(), mode, n, 250, 4, 9);
        let mut buf = Vec::new();
        write_trajectory_csv(&rows, mode, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_trajectory_csv(&back, mode, &mut again).unwrap();
        assert_eq!(again, buf);
    }
}

#[test]
fn replicates_are_independent_of_each_other() {
    let m = fixtures::rich_die_young_1();
    let few = simulate_trajectories(&m, Mode::Discrete, 2_000, 100, 3, 5);
    let many = simulate_trajectories(&m, Mode::Discrete, 2_000, 100, 8, 5);
    let prefix: Vec<_> = many.into_iter().filter(|r| r.replicate < 3).collect();
    assert_eq!(few, prefix);
}

#[test]
fn runs_are_deterministic() {
    let c =
        config(r#"{"fixture": "rich_are_old", "mode": "cmj", "t_grid": [1.0, 2.5], "replicates": 12, "base_seed": 8}"#)
            .unwrap();
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert_eq!(summary_json(&a.summary), summary_json(&b.summary));
    assert_eq!(a.rows, b.rows);
}

#[test]
fn plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(r#"{"fixture": "constant_2_1", "n_grid": [300, 900], "replicates": 10}"#).unwrap();
    write_plot_data(&run_experiment(&c).unwrap().summary, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("O_exponent.dat")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,error"));
    assert!(lines.count() >= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn survival_fraction_is_non_increasing(seed in any::<u64>(), d in 0.5f64..2.0) {
        let json = format!(
            r#"{{"model": {{"b": {{"family": "constant", "value": 1}}, "d": {{"family": "constant", "value": {d}}}}}, "n_grid": [10, 100, 1000], "replicates": 30, "base_seed": {seed}}}"#
        );
        let s = run_experiment(&config(&json).unwrap()).unwrap().summary;
        let f: Vec<f64> = s.rows.iter().map(|r| r.survival_fraction).collect();
        prop_assert!(f.windows(2).all(|w| w[1] <= w[0]), "{:?}", f);
        prop_assert!(f.iter().all(|x| (0.0..=1.0).contains(x)));
        for r in &s.rows {
            prop_assert!(r.survivor_count <= r.alive_replicates);
        }
    }
}
