use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench-cli"))
        .args(args)
        .output()
        .expect("bench-cli runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{name}.json"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_writes_traces_manifest_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = bench_cli(&[
        "run",
        "--config",
        config("linreg").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--methods",
        "gd,newton,ggn",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["trace_vanilla.csv", "trace_newton.csv", "trace_ggn.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(out.join("trace_ggn.csv")).unwrap();
    assert!(header.starts_with("iter,loss,grad_norm,alpha,step_norm,constraint,lambda_used,wall_ms\n0,"));
    assert!(stdout(&res).starts_with("method"));
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let res = bench_cli(&[
            "run",
            "--config",
            config("spiral3").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--methods",
            "cgn",
        ]);
        assert!(res.status.success());
        fs::read(out.join("trace_cgn.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "c"), run("2", "d"));
}

#[test]
fn compare_prints_one_row_per_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = bench_cli(&[
        "run",
        "--config",
        config("linreg").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let res = bench_cli(&[
        "compare",
        out.join("trace_vanilla.csv").to_str().unwrap(),
        out.join("trace_newton.csv").to_str().unwrap(),
        "--threshold",
        "10",
    ]);
    assert!(res.status.success());
    assert_eq!(stdout(&res).lines().count(), 3);
}

#[test]
fn malformed_trace_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("trace_x.csv");
    fs::write(&bad, "not,a,trace\n").unwrap();
    let res = bench_cli(&["compare", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("malformed trace"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"model": {"id": "mlp_gaussian"}}"#).unwrap();
    assert_eq!(bench_cli(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        bench_cli(&["run", "--config", config("sine").to_str().unwrap(), "--methods", "adam"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bench_cli(&["gen", "--name", "mnist"]).status.code(), Some(2));
    assert_eq!(bench_cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn all_methods_failing_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ls.json");
    fs::write(
        &cfg,
        r#"{
            "model": {"id": "linear_least_squares"},
            "dataset": {"name": "linreg", "size": 8, "noise": 0.1, "seed": 1},
            "methods": ["empirical_fisher"],
            "policy": {"type": "trust_region", "epsilon": 0.1},
            "iterations": 3,
            "seed": 1
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = bench_cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |sub: &str| {
        let out = dir.path().join(sub);
        let res = bench_cli(&["gen", "--name", "sine", "--size", "16", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(res.status.success());
        (fs::read(out.join("sine.csv")).unwrap(), fs::read(out.join("sine.json")).unwrap())
    };
    let a = gen("a");
    assert_eq!(a, gen("b"));
    assert_eq!(String::from_utf8(a.0).unwrap().lines().count(), 17);

    let out = dir.path().join("c");
    let res = bench_cli(&["gen", "--config", config("spiral3").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(out.join("spiral3.csv").exists());
}

#[test]
fn demo_reports_rotation() {
    let res = bench_cli(&["demo", "--g", "1,1", "--m", "100,0,0,1", "--epsilon", "0.1", "--csv"]);
    assert!(res.status.success());
    let text = stdout(&res);
    let angle: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# angle_degrees="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(angle > 30.0);

    let res = bench_cli(&["demo", "--m", "1,2,2,1"]);
    assert_eq!(res.status.code(), Some(1));
}
