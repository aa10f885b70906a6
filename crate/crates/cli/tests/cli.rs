use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pswitch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_builtins_names_every_example() {
    let o = pswitch(&["list-builtins"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in ["radial_pair", "unit_circle", "davydov_type1", "paper_linear_counterexample", "remark_gus_pair"] {
        assert!(out.contains(name), "{out}");
    }
}

#[test]
fn verdict_as_json() {
    let o = pswitch(&["verdict", "--builtin", "radial_pair", "--format", "json", "--require-conclusive"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"]["class"], "guas");
    assert_eq!(v["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_config_file_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[system]\nbuiltin = unit_circle\n\n[tasks]\nrun = trace, classify, simulate\nseed = 7\n\n\
         [simulate]\npolicy = greedy_radial\nstart = 2, 0\nt_max = 5\nh = 0.01\ncsv = greedy.csv\n",
    );
    let out = dir.path().join("out");
    let o = pswitch(&["analyze", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("unit_circle"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["collinearity"]["components"].as_array().unwrap().len(), 1);
    assert!(fs::read_to_string(out.join("figure.svg")).unwrap().starts_with("<svg"));
    let csv = fs::read_to_string(out.join("greedy.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,u\n"));
}

#[test]
fn simulate_exports_every_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = pswitch(&["simulate", "--builtin", "remark_gus_pair", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for k in 0..3 {
        assert!(dir.path().join(format!("simulation_{k}.csv")).exists());
    }
}

#[test]
fn seed_changes_random_runs_only() {
    let a = stdout(&pswitch(&["simulate", "--builtin", "radial_pair", "--format", "json", "--seed", "1"]));
    let b = stdout(&pswitch(&["simulate", "--builtin", "radial_pair", "--format", "json", "--seed", "1"]));
    let c = stdout(&pswitch(&["simulate", "--builtin", "radial_pair", "--format", "json", "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn config_errors_exit_2() {
    let o = pswitch(&["analyze", "--builtin", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radial_pair"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nx = (-x, -y)\ny = (-y, x\n");
    let o = pswitch(&["analyze", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = pswitch(&["analyze", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    // the polar escape fields are only piecewise smooth
    let o = pswitch(&["trace", "--builtin", "remark_gus_pair"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("piecewise smooth"));
}

#[test]
fn unknown_verdict_exits_4_when_required() {
    let dir = tempfile::tempdir().unwrap();
    // proportional fields: Q vanishes identically
    let cfg = write_config(dir.path(), "[system]\nx = (-x, -y)\ny = (-2*x, -2*y)\n\n[tasks]\nrun = verdict\n");
    let o = pswitch(&["verdict", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("unknown"));
    let o = pswitch(&["verdict", &cfg, "--require-conclusive"]);
    assert_eq!(o.status.code(), Some(4));
}
