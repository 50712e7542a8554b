//! End-to-end tests of the `sbmlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#""spec": {"family": "stable", "alpha": 0.4, "a1": 1, "a2": 1, "delta1": 0.4, "delta2": 0.4}"#;

fn sbmlab(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sbmlab"));
    cmd.args(args).env_remove("SBMLAB_SEED");
    if let Some(s) = env_seed {
        cmd.env("SBMLAB_SEED", s);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn overshoot_config(dir: &Path) -> String {
    let body = format!(r#"{{"experiment": "overshoot", {SPEC}, "mc": {{"n": 400}}}}"#);
    write_config(dir, "overshoot.json", &body)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn list_names_every_experiment() {
    let o = sbmlab(&["list"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["verify-scaling", "threeg", "harnack", "entropy-counterexample"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(sbmlab(&["frobnicate"], None).status.code(), Some(64));
    assert_eq!(sbmlab(&["run"], None).status.code(), Some(64));
    assert_eq!(sbmlab(&["validate", "--config", "/nonexistent.json"], None).status.code(), Some(64));
    assert_eq!(sbmlab(&["--help"], None).status.code(), Some(0));
}

#[test]
fn validate_reports_field_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let good = overshoot_config(tmp.path());
    assert_eq!(sbmlab(&["validate", "--config", &good], None).status.code(), Some(0));
    let bad = write_config(
        tmp.path(),
        "bad.json",
        &format!(r#"{{"experiment": "overshoot", {SPEC}, "d": 0, "params": {{"radii": [2, 1]}}}}"#),
    );
    let o = sbmlab(&["validate", "--config", &bad], None);
    assert_eq!(o.status.code(), Some(64));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("d: ") && err.contains("params.radii"), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = overshoot_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = sbmlab(&["run", "--config", &cfg, "--seed", "11", "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (da, db) = (a.join("overshoot/seed-11"), b.join("overshoot/seed-11"));
    let files = read_dir_sorted(&da);
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["manifest.json", "overshoot.csv", "report.json"]);
    assert_eq!(files, read_dir_sorted(&db));
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = overshoot_config(tmp.path());
    let out = tmp.path().join("runs");
    let out = out.to_str().unwrap();
    let manifest = |tag: &str| -> serde_json::Value {
        let p = Path::new(out).join("overshoot").join(tag).join("manifest.json");
        serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
    };

    sbmlab(&["run", "--config", &cfg, "--out", out], Some("42"));
    let m = manifest("seed-42");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["seed_source"], "env");

    sbmlab(&["run", "--config", &cfg, "--out", out, "--seed", "7"], Some("42"));
    assert_eq!(manifest("seed-7")["seed_source"], "flag");

    assert_eq!(sbmlab(&["run", "--config", &cfg, "--out", out], Some("abc")).status.code(), Some(64));
}

#[test]
fn verdicts_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let out = out.to_str().unwrap();
    let run = |name: &str, body: String| {
        let cfg = write_config(tmp.path(), name, &body);
        sbmlab(&["run", "--config", &cfg, "--out", out], None).status.code()
    };
    let key = |params: &str| format!(r#"{{"experiment": "key-integral", "tag": "t{}", {SPEC}, "params": {params}}}"#, params.len());
    assert_eq!(run("pass.json", key(r#"{"radii": [0.01, 0.02, 0.04]}"#)), Some(0));
    assert_eq!(run("fail.json", key(r#"{"radii": [0.01, 0.02, 0.04], "target_slope": 5}"#)), Some(2));
    // a horizon far below the exit time censors most paths
    let short = format!(r#"{{"experiment": "overshoot", {SPEC}, "mc": {{"n": 200, "horizon": 1e-4}}}}"#);
    assert_eq!(run("inconclusive.json", short), Some(3));
}
