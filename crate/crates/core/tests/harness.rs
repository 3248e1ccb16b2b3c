//! End-to-end runs of the experiment harness on small configurations.

use std::fs;
use std::path::Path;

use supercrit::harness::{run_experiment, ExperimentConfig, ExperimentKind, Status};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.push((rel, fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

const SIMULATE: &str = r#"
kind = "simulate"
seed = 5

[model]
alpha = 0.5

[kernel]
base = 1.0
amplitude = 0.3

[drift]
kind = "sine"
amplitude = 0.2

[sim]
horizon = 0.5
dt = 0.05
paths = 200
record_paths = 2
"#;

#[test]
fn identical_seeds_give_identical_artifacts() {
    let cfg = config(SIMULATE);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let fa = read_dir_sorted(a.path());
    let fb = read_dir_sorted(b.path());
    assert!(fa.iter().any(|(p, _)| p == "manifest.toml"));
    assert!(fa.iter().any(|(p, _)| p == "terminal.csv"));
    assert_eq!(fa, fb);
}

#[test]
fn different_seeds_change_the_sample() {
    let cfg = config(SIMULATE);
    let mut other = cfg.clone();
    other.seed = Some(6);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&other, b.path()).unwrap();
    let ta = fs::read(a.path().join("terminal.csv")).unwrap();
    let tb = fs::read(b.path().join("terminal.csv")).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(SIMULATE), dir.path()).unwrap();
    let manifest: toml::Table = fs::read_to_string(dir.path().join("manifest.toml")).unwrap().parse().unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let path = f["path"].as_str().unwrap();
        let bytes = fs::read(dir.path().join(path)).unwrap();
        let digest = supercrit::harness::report::sha256_hex(&bytes);
        assert_eq!(digest, f["sha256"].as_str().unwrap(), "{path}");
    }
}

#[test]
fn zero_source_gives_zero_solution() {
    let cfg = config(
        r#"
kind = "pde"

[model]
alpha = 0.5

[kernel]
base = 1.0
amplitude = 0.3

[drift]
kind = "sine"
amplitude = 0.2

[grid]
n = 32

[pde]
horizon = 0.2
dt = 0.02

[pde.source]
kind = "zero"
"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path()).unwrap();
    let zero = summary.checks.iter().find(|c| c.name == "zero solution").expect("zero solution check");
    assert_eq!(zero.status, Status::Pass, "{}", zero.detail);
    assert_eq!(summary.status, Status::Pass);
}

#[test]
fn invalid_configuration_writes_error_file() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Simulate);
    cfg.seed = None;
    let dir = tempfile::tempdir().unwrap();
    assert!(run_experiment(&cfg, dir.path()).is_err());
    let err: toml::Table = fs::read_to_string(dir.path().join("error.toml")).unwrap().parse().unwrap();
    assert_eq!(err["kind"].as_str(), Some("simulate"));
    assert!(err["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn successful_run_clears_stale_error_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("error.toml"), "stale").unwrap();
    run_experiment(&config(SIMULATE), dir.path()).unwrap();
    assert!(!dir.path().join("error.toml").exists());
}

#[test]
fn regime_study_in_balance_refines() {
    let cfg = config(
        r#"
kind = "regime-study"
seed = 41

[model]
alpha = 0.8

[kernel]
base = 1.0

[drift]
kind = "holder"
amplitude = 0.5
holder = 0.7

[sim]
horizon = 1.0
dt = 0.01
paths = 2000

[study]
mollifications = [0.4, 0.2, 0.1, 0.05]
"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(summary.status, Status::Pass, "{:?}", summary.checks);
    let ks = fs::read_to_string(dir.path().join("ks.csv")).unwrap();
    assert_eq!(ks.lines().count(), 4);
}

#[test]
fn regime_study_below_balance_is_descriptive() {
    let cfg = config(
        r#"
kind = "regime-study"
seed = 7

[model]
alpha = 0.5

[kernel]
base = 1.0

[drift]
kind = "holder"
amplitude = 0.5
holder = 0.3

[sim]
horizon = 0.5
dt = 0.02
paths = 300
"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(summary.status, Status::Descriptive);
    assert_eq!(summary.status.exit_code(), 0);
}
