use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use weylbench::experiment::{ExperimentConfig, EXPERIMENTS};
use weylbench::OperatorMatrix;

fn weylbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylbench")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut ExperimentConfig)) -> String {
    let mut c = ExperimentConfig::for_experiment(name).unwrap();
    c.output_dir = dir.join("runs");
    edit(&mut c);
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, c.to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_experiment() {
    let o = weylbench(&["list-experiments"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 16);
    for (name, _) in EXPERIMENTS {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn validate_reports_capacity_violation_with_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mauceri-check", |c| c.context.l_xi = 6.0);
    let o = weylbench(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("capacity") && err.contains("half-width"), "{err}");
}

#[test]
fn malformed_configs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"experiment": "mauceri-check", "colour": 3}"#).unwrap();
    let o = weylbench(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(weylbench(&["not-an-experiment"]).status.code(), Some(2));
    assert_eq!(weylbench(&["default-config", "theorem7"]).status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = weylbench(&["run", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn mauceri_check_subcommand_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = weylbench(&["mauceri-check", "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("constant = 0.5"));
    let run_dir = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["constant"], serde_json::json!(0.5));
    for key in ["config_hash", "seed", "tool_version", "calibration"] {
        assert!(!report[key].is_null(), "{key}");
    }
    assert!(run_dir.join("summary.txt").exists());
}

#[test]
fn run_and_default_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = weylbench(&["default-config", "counterexample-16"]);
    assert!(o.status.success());
    let mut c = ExperimentConfig::from_json(&stdout(&o)).unwrap();
    assert_eq!(c, ExperimentConfig::for_experiment("counterexample-16").unwrap());
    c.params.alphas = vec![16, 64];
    c.output_dir = dir.path().join("runs");
    let path = dir.path().join("c.json");
    fs::write(&path, c.to_json()).unwrap();
    let o = weylbench(&["run", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let growth = fs::read_to_string(c.output_dir.join(&c.hash()[..16]).join("growth.csv")).unwrap();
    let ratio: f64 = growth.lines().find(|l| l.starts_with("growth_ratio")).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
}

#[test]
fn exported_riesz_matrix_matches_the_recurrence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("riesz.bin");
    let o = weylbench(&["export-matrix", "riesz", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = OperatorMatrix::load(&path).unwrap();
    assert_eq!(m.dim(), 64);
    for k in 1..64 {
        let want = (2.0 * k as f64).sqrt() / (2.0 * k as f64 + 1.0).sqrt();
        assert!((m.get(k - 1, k).re - want).abs() < 1e-14, "k={k}");
    }
    let o = weylbench(&["export-matrix", "Q_1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "prop42", |_| {});
    let read = || {
        let o = weylbench(&["--threads", "1", "run", &cfg]);
        assert!(o.status.success(), "{}", stderr(&o));
        let run_dir = fs::read_dir(dir.path().join("runs")).unwrap().next().unwrap().unwrap().path();
        fs::read(run_dir.join("report.json")).unwrap()
    };
    assert_eq!(read(), read());
}
