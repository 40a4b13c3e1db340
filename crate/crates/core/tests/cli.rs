use std::path::Path;
use std::process::{Command, Output};

use nlfmg::harness::{ErrorReport, CSV_HEADER};

fn nlfmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfmg")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"{"study": "convergence", "mesh": {"divisions_per_axis": 4, "n_levels": 3}}"#;

#[test]
fn success_prints_csv_with_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = nlfmg(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 3);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let report = dir.path().join("r.json");
    let out = nlfmg(&[
        "solve",
        "--config",
        &cfg,
        "--levels",
        "2",
        "--zeta",
        "0",
        "--study",
        "single-solve",
        "--format",
        "json",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let parsed = ErrorReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.rows.len(), 2);
    assert!(parsed.rows.iter().all(|r| r.varpi_max.is_none()));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(nlfmg(&["solve", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let unknown = write_config(dir.path(), "unknown.json", r#"{"study": "convergence", "colour": 3}"#);
    assert_eq!(nlfmg(&["solve", "--config", &unknown]).status.code(), Some(2));

    let invalid = write_config(dir.path(), "zero.json", r#"{"mesh": {"n_levels": 0}}"#);
    let out = nlfmg(&["solve", "--config", &invalid]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh.n_levels"));

    let ok = write_config(dir.path(), "ok.json", SMALL);
    assert_eq!(nlfmg(&["solve", "--config", &ok, "--dim", "4"]).status.code(), Some(2));
}

#[test]
fn solver_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tiny.json",
        r#"{"mesh": {"divisions_per_axis": 4, "n_levels": 3, "memory_budget_bytes": 4096}}"#,
    );
    let out = nlfmg(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("memory budget"));
}

#[test]
fn reports_are_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let strip = |o: Output| -> Vec<String> {
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(11);
                f.join(",")
            })
            .collect()
    };
    let a = strip(nlfmg(&["solve", "--config", &cfg]));
    let b = strip(nlfmg(&["solve", "--config", &cfg]));
    assert_eq!(a, b);
}

#[test]
fn reference_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref.json");
    let write = write_config(
        dir.path(),
        "write.json",
        &format!(
            r#"{{"study": "convergence", "mesh": {{"divisions_per_axis": 4, "n_levels": 3}}, "reference": {{"kind": "extra-level", "path": {:?}}}}}"#,
            reference.display().to_string()
        ),
    );
    let read = write_config(
        dir.path(),
        "read.json",
        &format!(
            r#"{{"study": "convergence", "mesh": {{"divisions_per_axis": 4, "n_levels": 3}}, "reference": {{"kind": "file", "path": {:?}}}}}"#,
            reference.display().to_string()
        ),
    );
    let first = nlfmg(&["solve", "--config", &write]);
    assert_eq!(first.status.code(), Some(0));
    let second = nlfmg(&["solve", "--config", &read]);
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    let cols = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .map(|l| l.split(',').take(10).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(cols(&first), cols(&second));

    let mismatch = write_config(
        dir.path(),
        "mismatch.json",
        &format!(
            r#"{{"problem": {{"zeta": 2}}, "mesh": {{"divisions_per_axis": 4, "n_levels": 3}}, "reference": {{"kind": "file", "path": {:?}}}}}"#,
            reference.display().to_string()
        ),
    );
    assert_eq!(nlfmg(&["solve", "--config", &mismatch]).status.code(), Some(2));
}
