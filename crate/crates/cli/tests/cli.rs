use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cproj-lab"))
}

fn write(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cproj-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const FLAT: &str = r#"{"construct": "catalog", "key": "flat", "params": {"n": 2}}"#;

#[test]
fn verify_flat_passes() {
    let f = write("flat.json", FLAT);
    let out = bin().args(["verify", f.to_str().unwrap(), "--suite", "kahler"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "cproj-lab/1");
    assert_eq!(r["pass"], true);
    assert!(!r["checks"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_example_is_a_failed_check() {
    let f = write("nosuch.json", r#"{"construct": "catalog", "key": "nosuch"}"#);
    let out = bin().args(["verify", f.to_str().unwrap(), "--suite", "kahler"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false && c["error"].is_string()));
}

#[test]
fn bad_input_exits_2() {
    let out = bin().args(["verify", "/nonexistent/cproj.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let f = write("neg.json", &format!(r#"{{"manifold": {FLAT}, "tolerances": {{"kahler": -1}}}}"#));
    let out = bin().args(["verify", f.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kahler"));
}

#[test]
fn mobility_lists() {
    let out = bin().args(["mobility", "--n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let vals: Vec<u64> = serde_json::from_value(r["data"]["mobility"]["values"].clone()).unwrap();
    assert_eq!(vals, vec![1, 2, 9]);
}

#[test]
fn output_is_deterministic_across_job_counts() {
    let f = write("fs.json", r#"{"construct": "catalog", "key": "fubini_study", "params": {"n": 1}}"#);
    let run = |jobs: &str| {
        bin().env("CPROJ_LAB_JOBS", jobs).args(["verify", f.to_str().unwrap(), "--suite", "cproj"]).output().unwrap()
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn example_list_and_dump() {
    let out = bin().args(["example", "list"]).output().unwrap();
    let r = report(&out);
    assert!(r["keys"].as_array().unwrap().iter().any(|k| k == "ricciflat4d"));
    let out = bin().args(["example", "dump", "fubini_study", "--params", r#"{"n": 2}"#]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out).is_object());
    let out = bin().args(["example", "dump", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jplanar_probe_writes_csv() {
    let f = write("probe.json", FLAT);
    let csv = f.with_file_name("curve.csv");
    let out = bin()
        .args(["jplanar", "probe", f.to_str().unwrap(), "--trials", "3", "--csv", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x0,"));
    assert!(text.lines().count() > 10);
}
