use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_supercrit");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SUPERCRIT_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MAXPRINCIPLE: &str = r#"
kind = "verify-maxprinciple"
seed = 3

[model]
alpha = 0.5

[study]
js = [2, 3]
trials = 10
"#;

const WARN_APRIORI: &str = r#"
kind = "verify-apriori"
seed = 3

[model]
alpha = 0.5

[drift]
kind = "holder"
amplitude = 0.5
holder = 0.3
norm = 0.01

[study]
lambdas = [1.0, 10.0]
sources = 2
"#;

#[test]
fn passing_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", MAXPRINCIPLE);
    let out = dir.path().join("out");
    let o = run(&["verify", "maxprinciple", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    assert!(out.join("manifest.toml").exists());
    assert!(out.join("summary.toml").exists());
}

#[test]
fn hypothesis_warning_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", WARN_APRIORI);
    let out = dir.path().join("out");
    let o = run(&["verify", "apriori", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("WARN"));
}

#[test]
fn kind_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", MAXPRINCIPLE);
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
}

#[test]
fn missing_seed_exits_one_with_error_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "kind = \"simulate\"\n");
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("error.toml").exists());
}

#[test]
fn seed_flag_supplies_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "kind = \"simulate\"\n[sim]\nhorizon = 0.2\ndt = 0.05\npaths = 50\n",
    );
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 9"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "kind = \"symbol\"\nbogus = 1\n");
    let out = dir.path().join("out");
    let o = run(&["symbol", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bundled_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            supercrit::harness::ExperimentConfig::from_file(&p).unwrap().validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 12);
}
