use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rfi_mvue_core::io::write_statistics;
use rfi_mvue_core::{evaluate_error_variance, validate_statistics, Covariance, SquareMatrix};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rfi-mvue"));
    cmd.env_remove("RFI_MVUE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn file(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {out:?}"))
}

#[test]
fn weights_for_diagonal_covariance() {
    let dir = TempDir::new().unwrap();
    let stats = file(&dir, "stats.txt", "2\n0 0\n2 0\n0 4\n");
    let o = run(&["weights", "--stats", s(&stats)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        field(&out, "weights"),
        "0.6666666666666666 0.3333333333333333"
    );
    assert_eq!(field(&out, "min_variance"), "1.3333333333333333");
    assert_eq!(field(&out, "lambda"), "-1.3333333333333333");
}

#[test]
fn weights_reject_singular_covariance() {
    let dir = TempDir::new().unwrap();
    let stats = file(&dir, "stats.txt", "2\n0 0\n1 1\n1 1\n");
    let o = run(&["weights", "--stats", s(&stats)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("not positive definite"),
        "{}",
        stderr(&o)
    );
    assert!(stdout(&o).is_empty());
}

#[test]
fn weights_reject_truncated_file() {
    let dir = TempDir::new().unwrap();
    let stats = file(&dir, "stats.txt", "3\n0 0 0\n1 0 0\n0 1 0\n");
    let o = run(&["weights", "--stats", s(&stats)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse error"));
}

#[test]
fn missing_input_is_an_io_failure() {
    let o = run(&["weights", "--stats", "/nonexistent/stats.txt"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn printed_weights_reproduce_min_variance() {
    let rows = vec![
        vec![4.0, 1.0, 0.5, 0.0],
        vec![1.0, 3.0, 0.25, 0.1],
        vec![0.5, 0.25, 2.0, 0.3],
        vec![0.0, 0.1, 0.3, 1.5],
    ];
    let stats = validate_statistics(
        vec![1.0, 2.0, 3.0, 4.0],
        Covariance::Dense(SquareMatrix::from_rows(&rows).unwrap()),
    )
    .unwrap();
    let dir = TempDir::new().unwrap();
    let path = file(&dir, "stats.txt", &write_statistics(&stats));
    let out = stdout(&run(&["weights", "--stats", s(&path)]));
    let weights: Vec<f64> = field(&out, "weights")
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let printed: f64 = field(&out, "min_variance").parse().unwrap();
    let recomputed = evaluate_error_variance(&weights, &stats).unwrap();
    assert!((recomputed - printed).abs() <= 1e-12 * printed);
}

#[test]
fn baseline_estimate_drops_outlier() {
    let dir = TempDir::new().unwrap();
    let samples = file(&dir, "p.txt", "4\n0 0 0 4\n");
    let o = run(&[
        "estimate",
        "--samples",
        s(&samples),
        "--method",
        "baseline",
        "--beta",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "estimate"), "0");
    assert_eq!(field(&out, "retained"), "3");
    assert_eq!(field(&out, "fallback"), "false");
}

#[test]
fn weighted_estimate_recovers_offset() {
    let dir = TempDir::new().unwrap();
    let stats = file(
        &dir,
        "stats.txt",
        "4\n1 2 3 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
    );
    let samples = file(&dir, "p.txt", "4\n8 9 10 11\n");
    let o = run(&[
        "estimate",
        "--samples",
        s(&samples),
        "--stats",
        s(&stats),
        "--method",
        "weighted",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "estimate"), "7");
    assert_eq!(field(&out, "theoretical_variance"), "0.25");
}

#[test]
fn estimate_shape_mismatch() {
    let dir = TempDir::new().unwrap();
    let stats = file(
        &dir,
        "stats.txt",
        "4\n0 0 0 0\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
    );
    let samples = file(&dir, "p.txt", "3\n1 2 3\n");
    for method in ["weighted", "baseline"] {
        let o = run(&[
            "estimate",
            "--samples",
            s(&samples),
            "--stats",
            s(&stats),
            "--method",
            method,
        ]);
        assert_eq!(o.status.code(), Some(4), "{method}: {}", stderr(&o));
    }
}

#[test]
fn weighted_estimate_needs_stats() {
    let dir = TempDir::new().unwrap();
    let samples = file(&dir, "p.txt", "2\n1 2\n");
    let o = run(&["estimate", "--samples", s(&samples), "--method", "weighted"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["estimate", "--samples", "x", "--method", "median"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = file(
        &dir,
        "sim.conf",
        "# small sweep\ntrials_per_m = 50\nseed = 3\n",
    );
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in [
        "sweep.csv",
        "sweep.json",
        "error_vs_m.dat",
        "variance_vs_m.dat",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
        assert!(stdout(&o).contains(name));
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",3")));

    let json = fs::read_to_string(out.join("sweep.json")).unwrap();
    let parsed = rfi_mvue_core::SweepResult::from_json(&json).unwrap();
    assert_eq!(parsed.to_csv(), csv);
}

#[test]
fn simulate_format_selection() {
    let dir = TempDir::new().unwrap();
    let cfg = file(
        &dir,
        "sim.conf",
        "trials_per_m = 5\nm_values = 1,2\nformat = json\n",
    );
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("sweep.json").exists());
    assert!(!out.join("sweep.csv").exists());

    let out2 = dir.path().join("out2");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&out2),
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    assert!(out2.join("sweep.csv").exists());
    assert!(!out2.join("sweep.json").exists());
}

#[test]
fn simulate_seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = file(
        &dir,
        "sim.conf",
        "trials_per_m = 5\nm_values = 1\nformat = csv\n",
    );
    let out = dir.path().join("out");
    let o = bin()
        .args(["simulate", "--config", s(&cfg), "--out", s(&out)])
        .env("RFI_MVUE_SEED", "1234")
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",1234"));

    // the flag wins over the environment
    let o = bin()
        .args([
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--seed",
            "9",
        ])
        .env("RFI_MVUE_SEED", "1234")
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",9"));
}

#[test]
fn simulate_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for bad in [
        "trials_per_m = 0\n",
        "unknown_key = 1\n",
        "beta = -1\n",
        "m_values = \n",
    ] {
        let cfg = file(&dir, "bad.conf", bad);
        let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{bad:?}: {}", stderr(&o));
    }
}

#[test]
fn simulate_unwritable_output_is_io_failure() {
    let dir = TempDir::new().unwrap();
    let blocker = file(&dir, "blocker", "");
    let cfg = file(&dir, "sim.conf", "trials_per_m = 1\nm_values = 1\n");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&blocker.join("sub")),
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}
