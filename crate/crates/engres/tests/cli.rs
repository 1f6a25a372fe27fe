use std::path::Path;
use std::process::{Command, Output};

fn engres(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engres")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn list_scenarios_names_all_seven() {
    let tmp = tempfile::tempdir().unwrap();
    let out = engres(&["list-scenarios"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["nonadiabatic", "memory", "interferometer", "effective-check", "elimination-check", "phase-cycle", "sweep"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn run_writes_the_record_and_prints_its_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"name":"memory","params":{"delta1":0}}"#);
    let out = engres(&["run", &cfg, "--out", "records", "--workers", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join(String::from_utf8(out.stdout).unwrap().trim());
    assert!(dir.starts_with(tmp.path().join("records/memory")));
    for f in ["summary.json", "series.csv", "resolved_config.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["derived"]["chi"], 0.0);
    assert_eq!(summary["schema"], "engres.summary/1");
}

#[test]
fn repeated_runs_write_identical_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"name":"interferometer"}"#);
    let dirs: Vec<_> = (0..2)
        .map(|_| {
            let out = engres(&["run", &cfg, "--out", "r"], tmp.path());
            assert!(out.status.success());
            tmp.path().join(String::from_utf8(out.stdout).unwrap().trim())
        })
        .collect();
    let read = |d: &Path| std::fs::read(d.join("series.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}

#[test]
fn validate_prints_the_resolved_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"name":"sweep","sweep_axis":["gamma",[1,10,100]]}"#);
    let out = engres(&["validate", &cfg], tmp.path());
    assert!(out.status.success());
    let runs: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(runs[2]["params"]["gamma"], 100.0);
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn config_errors_exit_2_with_the_offending_path() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, path) in [
        (r#"{"name":"nonadiabatic","params":{"omega2":-1}}"#, "params.omega2"),
        (r#"{"name":"nonadiabatic","params":{"omega3":1}}"#, "params.omega3"),
        (r#"{"name":"sweep","sweep_axis":["gamma",[]]}"#, "sweep_axis[1]"),
        (r#"{"name":"nonadiabatic""#, "$"),
    ] {
        let cfg = write(tmp.path(), "bad.json", text);
        for cmd in ["run", "validate"] {
            let out = engres(&[cmd, &cfg], tmp.path());
            assert_eq!(out.status.code(), Some(2), "{text}");
            let e = error_json(&out);
            assert_eq!(e["exit_code"], 2);
            assert_eq!(e["error"], "config");
            assert_eq!(e["path"], path, "{text}");
        }
    }
    let out = engres(&["run", "missing.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"name":"nonadiabatic","params":{"cavity_decay":0},"grid":{"t_end":1}}"#);
    let out = engres(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["exit_code"], 3);
}

#[test]
fn regime_violation_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"name":"memory","params":{"delta_a":0}}"#);
    let out = engres(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let e = error_json(&out);
    assert_eq!(e["error"], "regime");
    assert!(e["message"].as_str().unwrap().contains("memory"));
}
