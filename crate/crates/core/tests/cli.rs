use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage() {
    let out = bin(&[]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sc in [
        "getoor",
        "heat-kernel",
        "smoothing-fit",
        "disk-minimizer",
        "el-check",
        "sweep",
    ] {
        assert!(text.contains(sc), "usage lacks {sc}");
    }
}

#[test]
fn getoor_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("getoor.cfg");
    fs::write(&cfg, "# half order\nsigma = 1\nn = 1024\n").unwrap();
    let out_dir = dir.path().join("run");
    let out = bin(&[
        "getoor",
        "--config",
        path(&cfg),
        "--set",
        "inner=0.5",
        "--out",
        path(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS flatness"));

    let csv = fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("y,f,laplacian"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(first.iter().all(|c| c.contains('e')));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["inner"], "0.5");
    assert_eq!(manifest["config"]["n"], "1024");
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["build"]
        .as_str()
        .unwrap()
        .starts_with("nonlocal-lab"));

    let verdicts: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verdicts.json")).unwrap()).unwrap();
    assert!(verdicts.iter().all(|v| v["passed"] == true));
}

#[test]
fn failing_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a coarse grid cannot resolve the free boundary profile flatly
    let out = bin(&[
        "getoor",
        "--set",
        "n=64",
        "--set",
        "sigma=0.5",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn bad_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["evolve", "--set", "nonsense=1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    let out = bin(&["obstacle", "--set", "n=100", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("grid"));
}

#[test]
fn seed_reproduces_ensembles() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let d = dir.path().join(name);
        let out = bin(&[
            "disk-minimizer",
            "--seed",
            seed,
            "--set",
            "M=60",
            "--set",
            "budget=50",
            "--out",
            path(&d),
        ]);
        assert!(out.status.code().is_some());
        fs::read(d.join("ensemble.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
    let header = String::from_utf8_lossy(&a)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "id,x1,x2");
}

#[test]
fn sweep_aggregates_and_preserves_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "sweep",
        "--set",
        "scenario=heat-kernel",
        "--set",
        "axis=t",
        "--set",
        "values=0.5,1,2",
        "--set",
        "n=512",
        "--workers",
        "2",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(table.starts_with("t,passed,"));
    assert_eq!(table.lines().count(), 4);
    assert!(dir.path().join("t-2").join("kernel.csv").exists());

    let broken = dir.path().join("broken");
    let out = bin(&[
        "sweep",
        "--set",
        "scenario=heat-kernel",
        "--set",
        "axis=t",
        "--set",
        "values=1,-1",
        "--set",
        "n=512",
        "--out",
        path(&broken),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(broken.join("t-1").join("kernel.csv").exists());
    assert!(broken.join("t--1").join("error.json").exists());
    assert_eq!(
        fs::read_to_string(broken.join("sweep.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn empty_sweep_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sweep");
    let out = bin(&["sweep", "--set", "values=", "--out", path(&target)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!target.exists());
    let out = bin(&["sweep", "--set", "axis=bogus", "--out", path(&target)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!target.exists());
}
