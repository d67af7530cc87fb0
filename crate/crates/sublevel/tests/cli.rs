//! End-to-end checks of the `sublevel` binary: exit codes, error messages
//! naming the offending field or method, and the on-disk artifacts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sublevel"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_config_is_exit_2() {
    let out = bin()
        .args(["run", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_method_name_is_exit_2_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        r#"
[problem]
kind = "logistic"
m = 20
n = 5

[[method]]
name = "sgd"
"#,
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sgd"), "stderr must name the method: {stderr}");
}

#[test]
fn unknown_field_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        r#"
[problem]
kind = "logistic"
m = 20
n = 5
frobnicate = true

[[method]]
name = "gd"
"#,
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_iteration_budget_is_a_valid_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.toml",
        r#"
[problem]
kind = "logistic"
m = 40
n = 8
seed = 1

[budget]
max_iters = 0

[output]
timing = "none"

[[method]]
name = "gd"

[[method]]
name = "sigmasvd"
coarse_dim = 4
rank = 2
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // Header plus exactly the initial point.
    let csv = std::fs::read_to_string(out_dir.join("gd.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("k,f,grad_norm,decrement,step,sigma_floor,elapsed_s\n"));
    // The run directory always carries the exact config snapshot.
    assert_eq!(
        std::fs::read_to_string(out_dir.join("config.toml")).unwrap(),
        std::fs::read_to_string(&cfg).unwrap()
    );
    assert!(out_dir.join("convergence.svg").exists());
}

#[test]
fn infeasible_start_is_runtime_failure_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "dom.toml",
        r#"
[problem]
kind = "loglinear"
m = 60
n = 30
seed = 2

[init]
x0 = "gaussian"
seed = 3

[budget]
max_iters = 5

[[method]]
name = "gd"
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // Partial artifacts are preserved.
    assert!(out_dir.join("gd.json").exists());
}

#[test]
fn escape_without_section_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "noescape.toml",
        r#"
[problem]
kind = "nls"
m = 40
n = 10
"#,
    );
    let out = bin().args(["escape", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn escape_writes_table_and_repeats_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "escape.toml",
        r#"
seed = 9

[problem]
kind = "nls"
distribution = "plateau-gateway"
m = 300
n = 50
block = 8
guards = 2
guard_rows = 3
seed = 6

[escape]
trials = 6
sweep_n = ["0.2n", "0.4n"]
rank = 6
mode = "truncated"
max_iters = 12
"#,
    );
    let mut tables = Vec::new();
    for name in ["e1", "e2"] {
        let out_dir = dir.path().join(name);
        let out = bin()
            .args(["escape", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        tables.push(std::fs::read(out_dir.join("escape.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1], "same config and seed must reproduce the table");
    let text = String::from_utf8(tables[0].clone()).unwrap();
    assert!(text.starts_with("N,probability\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn single_trial_probabilities_are_zero_or_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.toml",
        r#"
[problem]
kind = "nls"
distribution = "plateau-gateway"
m = 300
n = 50
block = 8
guards = 2
guard_rows = 3
seed = 6

[escape]
trials = 1
sweep_n = [10, 25]
rank = 6
mode = "truncated"
max_iters = 12
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["escape", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("escape.csv")).unwrap();
    for line in text.lines().skip(1) {
        let prob: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(prob == 0.0 || prob == 1.0, "trials=1 must give 0 or 1, got {prob}");
    }
}

#[test]
fn verify_passes_and_emits_json() {
    let out = bin().arg("verify").output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "verify failed:\n{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] decrement-chain"));

    let out = bin().args(["verify", "--json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let probes = parsed.as_array().unwrap();
    assert!(probes.len() >= 5);
    for probe in probes {
        assert_eq!(probe["pass"], serde_json::Value::Bool(true));
    }
}
