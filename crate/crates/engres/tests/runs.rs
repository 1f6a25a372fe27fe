use engres::output::{read_series, series_to_string};
use engres::{execute, parse_config, run_scenario, HarnessError};

fn scenario(text: &str) -> engres::Scenario {
    parse_config(text).unwrap()
}

#[test]
fn identical_configs_give_identical_records() {
    for text in [
        r#"{"name":"nonadiabatic"}"#,
        r#"{"name":"memory","params":{"delta1":0}}"#,
        r#"{"name":"phase-cycle"}"#,
        r#"{"name":"sweep","sweep_axis":["gamma",[1,10,100]]}"#,
    ] {
        let s = scenario(text);
        let a = execute(&s, 1).unwrap();
        let b = execute(&s, 3).unwrap();
        assert_eq!(a.summary.without_timing(), b.summary.without_timing(), "{text}");
        assert_eq!(series_to_string(&a.series), series_to_string(&b.series), "{text}");
        assert_eq!(a.resolved_config, b.resolved_config);
    }
}

#[test]
fn nonadiabatic_defaults_report_the_rate_ratio_and_formula() {
    let run = execute(&scenario(r#"{"name":"nonadiabatic"}"#), 1).unwrap();
    let s = &run.summary;
    assert_eq!(s.derived.rate_ratio, Some(100.0));
    assert_eq!(s.derived.gamma_eng, Some(1e4));
    assert!((s.fidelities["formula"] - 803.0 / 806.0).abs() < 1e-15);
    assert!(s.invariants.unwrap().within_bounds);
    assert_eq!(s.params.gamma, 100.0);
    assert_eq!(s.params.cavity_decay, 1e6);
}

#[test]
fn rate_ratio_sweep_tabulates_the_closed_form() {
    let run = execute(&scenario(r#"{"name":"sweep","sweep_axis":["rate_ratio",[1,10,100]]}"#), 2).unwrap();
    let column: Vec<f64> = run.series.column("fidelity_formula").unwrap().into_iter().map(Option::unwrap).collect();
    let expected = [1.0 - 1.0 / (2.0 + 8.0 / 3.0), 83.0 / 86.0, 803.0 / 806.0];
    for (f, e) in column.iter().zip(expected) {
        assert!((f - e).abs() < 1e-14, "{f} vs {e}");
    }
    assert!((column[0] - 0.7857).abs() < 1e-4);
    assert_eq!(run.summary.points.len(), 3);
    let ratios: Vec<f64> = run.series.column("rate_ratio").unwrap().into_iter().map(Option::unwrap).collect();
    for (r, e) in ratios.iter().zip([1.0, 10.0, 100.0]) {
        assert!((r - e).abs() < 1e-12 * e);
    }
}

#[test]
fn gamma_sweep_runs_three_points() {
    let run = execute(&scenario(r#"{"name":"sweep","sweep_axis":["gamma",[1,10,100]]}"#), 2).unwrap();
    let gammas: Vec<f64> = run.series.column("gamma").unwrap().into_iter().map(Option::unwrap).collect();
    assert_eq!(gammas, [1.0, 10.0, 100.0]);
    assert_eq!(run.resolved_config.as_array().unwrap().len(), 3);
}

#[test]
fn every_run_writes_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (run, dir) = run_scenario(&scenario(r#"{"name":"phase-cycle"}"#), tmp.path(), 1).unwrap();
    assert!(dir.starts_with(tmp.path().join("phase-cycle")));
    let summary: engres::RunSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, run.summary);
    let series = read_series(&std::fs::read_to_string(dir.join("series.csv")).unwrap()).unwrap();
    assert_eq!(series, run.series);
    assert_eq!(series.schema, "engres.series.phase-cycle/1");
    assert_eq!(series.columns[0], "t");
    let resolved = std::fs::read_to_string(dir.join("resolved_config.json")).unwrap();
    let again = parse_config(&resolved).unwrap().resolve().unwrap();
    assert_eq!(again.params.omega1, summary.params.omega1);

    let (_, second) = run_scenario(&scenario(r#"{"name":"phase-cycle"}"#), tmp.path(), 1).unwrap();
    assert_ne!(dir, second);
}

#[test]
fn regime_violation_is_reported_as_such() {
    let s = scenario(r#"{"name":"nonadiabatic","params":{"delta_a":2e6}}"#);
    let err = execute(&s, 1).unwrap_err();
    assert!(matches!(err, HarnessError::Regime { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn numerical_failure_carries_the_scenario() {
    let s = scenario(r#"{"name":"nonadiabatic","params":{"cavity_decay":0},"grid":{"t_end":1}}"#);
    let err = execute(&s, 1).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("nonadiabatic"), "{err}");
}

#[test]
fn sweep_failures_surface_from_the_failing_point() {
    let s = scenario(r#"{"name":"sweep","sweep_axis":["delta_a",[-2e6,2e6]]}"#);
    assert_eq!(execute(&s, 2).unwrap_err().exit_code(), 4);
}
