use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn alab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_to(dir: &Path, cfg: &Path, tag: &str, extra: &[&str]) -> (Output, PathBuf, PathBuf) {
    let csv = dir.join(format!("{tag}.csv"));
    let json = dir.join(format!("{tag}.json"));
    let out = alab()
        .arg("run")
        .arg(cfg)
        .arg("--csv")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .args(extra)
        .output()
        .unwrap();
    (out, csv, json)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const WEGNER: &str = r#"
experiment = "wegner"
intervals = ["]-0.025,0.025]"]

[ensemble]
sides = [32]
measure = "uniform(0,1)"

[mc]
seed = 7
samples = 2000
"#;

#[test]
fn wegner_config_passes_with_one_row() {
    let dir = TempDir::new().unwrap();
    let (out, csv, json) = run_to(dir.path(), &config("wegner.toml"), "w", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "experiment,n,samples,empirical,ci_low,ci_high,bound,ratio,pass");
    assert!(lines[1].ends_with("true"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["all_pass"], true);
    assert!(report["timestamp"].is_string());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn zero_bound_scale_fails() {
    let dir = TempDir::new().unwrap();
    // The window holds the whole spectrum, so every sample counts 32.
    let text = WEGNER.replace("]-0.025,0.025]", "]-3,4]");
    let cfg = write_config(dir.path(), &format!("{text}bound_scale = 0.0\n"));
    let (out, csv, _) = run_to(dir.path(), &cfg, "w", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(std::fs::read_to_string(csv).unwrap().contains("false"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn oracle_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = alab()
        .arg("oracle-suite")
        .arg("--csv")
        .arg(dir.path().join("o.csv"))
        .arg("--json")
        .arg(dir.path().join("o.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("counting-oracle"));
    assert!(stdout.contains("interlacing"));
}

#[test]
fn csv_is_reproducible_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), WEGNER);
    let (a, csv_a, _) = run_to(dir.path(), &cfg, "a", &["--workers", "1"]);
    let (b, csv_b, _) = run_to(dir.path(), &cfg, "b", &["--workers", "1"]);
    let (c, csv_c, _) = run_to(dir.path(), &cfg, "c", &["--workers", "4"]);
    for o in [&a, &b, &c] {
        assert_eq!(o.status.code(), Some(0));
    }
    let first = std::fs::read(csv_a).unwrap();
    assert_eq!(first, std::fs::read(csv_b).unwrap());
    assert_eq!(first, std::fs::read(csv_c).unwrap());
}

#[test]
fn seed_override_changes_the_estimate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), WEGNER);
    let (_, csv_a, _) = run_to(dir.path(), &cfg, "a", &[]);
    let (_, csv_b, _) = run_to(dir.path(), &cfg, "b", &["--seed", "8"]);
    assert_ne!(std::fs::read(csv_a).unwrap(), std::fs::read(csv_b).unwrap());
}

#[test]
fn invalid_config_exits_with_two_and_names_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"wegner\"\nintervals = [\"]0.4,0.2]\"]\ncolour = 1\n[mc]\nsamples = 10\n",
    );
    let (out, csv, _) = run_to(dir.path(), &cfg, "x", &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("intervals"), "{stderr}");
    assert!(stderr.contains("colour"), "{stderr}");
    assert!(stderr.contains("seed"), "{stderr}");
    assert!(!csv.exists());
}

#[test]
fn missing_config_file_exits_with_two() {
    let out = alab().arg("run").arg("/nonexistent/alab.toml").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/alab.toml"));
}

#[test]
fn list_experiments_names_every_experiment() {
    let out = alab().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in [
        "wegner",
        "minami",
        "generalized",
        "probability",
        "spectral-avg",
        "appendix-a",
        "truncation",
        "multiplicity",
        "spacings",
        "oracle-suite",
    ] {
        assert!(stdout.contains(name), "missing {name}");
    }
}
