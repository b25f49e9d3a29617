use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cpe(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cpe"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .env("CPE_THREADS", "1")
        .output()
        .unwrap()
}

fn columns(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const CONSTANT: &str = r#"
[grid]
n = 8

[initial]
family = "constant"
v = [0.3, -0.2]
sigma = 1.5
p = 2.0

[run]
T_final = 0.01
record_every = 2

[picard]
T_final = 0.001
"#;

const RANDOM: &str = r#"
seed = 5

[grid]
n = 8

[initial]
family = "smooth-random"
amplitude = 0.2
band = 2

[run]
T_final = 0.002
"#;

#[test]
fn run_on_constant_data_conserves_mass() {
    let dir = TempDir::new().unwrap();
    let out = cpe(dir.path(), CONSTANT, &["--quiet", "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/run.csv")).unwrap();
    let mass = columns(&csv, "mass");
    assert!(mass.len() >= 2);
    assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-12 * mass[0]));
    assert!(dir.path().join("out/final.cpe").exists());
}

#[test]
fn picard_on_constant_data_converges_at_once() {
    let dir = TempDir::new().unwrap();
    let out = cpe(dir.path(), CONSTANT, &["--quiet", "picard"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/picard.csv")).unwrap();
    assert!(csv.lines().count() - 1 <= 2);
}

#[test]
fn inspect_prints_the_header() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cpe(dir.path(), CONSTANT, &["--quiet", "run"]).status.code(), Some(0));
    let snap = dir.path().join("out/final.cpe");
    let out = Command::new(env!("CARGO_BIN_EXE_cpe")).arg("inspect").arg(&snap).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["version = 1", "nx = 8", "nz = 8", "gamma = ", "epsilon = ", "min_sigma = 1.5"] {
        assert!(text.contains(key), "missing `{key}` in\n{text}");
    }
}

#[test]
fn inspect_rejects_garbage() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.cpe");
    fs::write(&bad, b"not a snapshot").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cpe")).arg("inspect").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_physics_exits_with_fault() {
    let dir = TempDir::new().unwrap();
    let out = cpe(dir.path(), "[physics]\ngamma = 0.5\n", &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn unknown_keys_exit_with_fault() {
    let dir = TempDir::new().unwrap();
    let out = cpe(dir.path(), "[run]\nT_fnal = 1.0\n", &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.T_fnal"));
}

#[test]
fn missing_config_is_a_usage_fault() {
    let out = Command::new(env!("CARGO_BIN_EXE_cpe")).arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_tables() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    assert_eq!(cpe(a.path(), RANDOM, &["--quiet", "run"]).status.code(), Some(0));
    assert_eq!(cpe(b.path(), RANDOM, &["--quiet", "run"]).status.code(), Some(0));
    assert_eq!(cpe(c.path(), RANDOM, &["--quiet", "--seed", "6", "run"]).status.code(), Some(0));
    let read = |d: &TempDir| fs::read(d.path().join("out/run.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn exhausted_picard_iteration_exits_with_no_contraction() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{RANDOM}\n[picard]\nT_final = 0.001\ntol = 1e-300\nmax_iter = 2\n");
    let out = cpe(dir.path(), &cfg, &["--quiet", "picard"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/picard.csv").exists());
}

#[test]
fn inequality_lab_writes_its_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = "seed = 3\n[ineq]\nkind = \"COME\"\ntrials = 4\nbands = [2, 3]\n";
    let out = cpe(dir.path(), cfg, &["--quiet", "ineq-lab"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/ineq_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("out/ineq_band3.csv").exists());
    let hist = fs::read_to_string(dir.path().join("out/ineq_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 21);
}
