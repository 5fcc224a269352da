use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SHORT: &str = "\
[clocks]
horizon_end_s = 43200.0

[fleet]
plug_out_s = 43200.0

[run]
soc_window_start_s = 39600.0
soc_window_end_s = 43200.0
";

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2g-sfr")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn short_config(dir: &Path) -> String {
    let path = dir.join("short.toml");
    fs::write(&path, SHORT).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn validate_accepts_a_good_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = cli(&["validate", "--config", &cfg, "--preset", "desk"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains(": ok (10 stations, 500 EVs"));

    let out = cli(&["validate", "--config", &cfg, "--preset", "desk", "--print"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("horizon_end_s = 43200.0"));
}

#[test]
fn validate_rejects_a_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[clocks]\ndt_regu_s = -4.0\n").unwrap();
    let out = cli(&["validate", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let out = cli(&["validate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn run_prints_metrics_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "run", "--config", &cfg, "--preset", "desk", "--strategy", "cs1", "--seed", "7",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ACE"));
    for name in ["timeseries.csv", "soc_traces.csv", "metrics.kv", "report.txt", "config.toml"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    let snapshot = fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(snapshot.contains("seed = 7") && snapshot.contains("strategy = \"cs1\""));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = cli(&[
        "sweep", "--config", &cfg, "--preset", "desk", "--axis", "policy.mu", "--value", "0.5", "--value", "0.8",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(out_dir.join("00_0.5/metrics.kv").is_file());
    assert!(out_dir.join("01_0.8/metrics.kv").is_file());
}

#[test]
fn compare_always_includes_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = cli(&[
        "compare", "--config", &cfg, "--preset", "desk", "--strategy", "cs2", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("W/O V2G") && text.contains("CS2") && !text.contains("CS1"));
    assert_eq!(fs::read_to_string(out_dir.join("comparison.txt")).unwrap(), text);
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let out = cli(&["run", "--preset", "desk", "--strategy", "cs3"]);
    assert!(!out.status.success());
}
