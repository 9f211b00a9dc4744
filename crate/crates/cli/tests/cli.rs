//! End-to-end tests of the `torbesov` binary: exit codes, artifacts,
//! determinism, and error diagnostics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_torbesov")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("torbesov-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("TORBESOV_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("op_identity"));
    assert!(text.contains("overall: PASS"));
}

#[test]
fn commutator_decay_example_config_runs_green() {
    let dir = scratch("commutator");
    let cfg = configs().join("commutator-decay.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = fs::read_to_string(dir.join("commutator-decay.series.csv")).unwrap();
    assert!(
        csv.lines().any(|l| l.contains(",c_j,")),
        "c_j series in CSV"
    );
    assert!(
        csv.lines().any(|l| l.contains(",fitted_slope,")),
        "slope in CSV"
    );
    let json: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("commutator-decay.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["experiment"], "commutator-decay");
    assert!(json["fits"][0]["slope"].as_f64().unwrap() < 0.0);
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn opnorm_with_s_at_or_above_r_is_a_usage_error() {
    let dir = scratch("opnorm-bad");
    let cfg_path = dir.join("bad.json");
    fs::write(
        &cfg_path,
        r#"{
          "experiment": "opnorm",
          "geometry": { "n": 1, "d": 1, "kmax": 8 },
          "symbol": { "name": "weierstrass", "params": { "r": 0.5, "levels": 3 } },
          "estimate": { "s": 0.5, "trials": 2 }
        }"#,
    )
    .unwrap();
    let out = run(&[
        "run",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0 < s < r"), "stderr: {err}");
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn malformed_config_reports_field_path() {
    let dir = scratch("malformed");
    let cfg_path = dir.join("broken.json");
    fs::write(
        &cfg_path,
        r#"{
          "experiment": "kernel-bound",
          "geometry": { "n": 1, "d": 1, "kmax": "many" }
        }"#,
    )
    .unwrap();
    let out = run(&["run", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("geometry.kmax"), "stderr: {err}");
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn reports_are_bit_identical_across_reruns() {
    let dir1 = scratch("det1");
    let dir2 = scratch("det2");
    let cfg = configs().join("block-estimate.json");
    for dir in [&dir1, &dir2] {
        let out = run(&[
            "run",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = fs::read(dir1.join("block-estimate.report.json")).unwrap();
    let b = fs::read(dir2.join("block-estimate.report.json")).unwrap();
    assert_eq!(a, b, "reports must be bit-identical for equal config+seed");
    let _ = fs::remove_dir_all(dir1);
    let _ = fs::remove_dir_all(dir2);
}

#[test]
fn besov_norm_single_frequency_closed_form() {
    let dir = scratch("besov");
    let cfg = configs().join("besov-norm.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("besov-norm.report.json")).unwrap())
            .unwrap();
    let value = json["series"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["series"] == "besov_norm")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((value - 6.0).abs() < 1e-10, "besov norm {value}");
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn check_dyadic_writes_decomposition_table() {
    let dir = scratch("dyadic");
    let cfg = configs().join("check-dyadic.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(dir.join("check-dyadic.decomposition.csv")).unwrap();
    assert!(table.starts_with("j,k_1,value"));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn kernel_bound_config_runs_green() {
    let dir = scratch("kernel");
    let cfg = configs().join("kernel-bound.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("kernel-bound.series.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",C_j,")));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn opnorm_config_runs_green() {
    let dir = scratch("opnorm");
    let cfg = configs().join("opnorm.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("opnorm.report.json")).unwrap()).unwrap();
    let verdicts = json["verdicts"].as_array().unwrap();
    assert!(verdicts
        .iter()
        .any(|v| v["name"] == "stability" && v["pass"] == true));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = scratch("envdir");
    let cfg = configs().join("besov-norm.json");
    let out = Command::new(bin())
        .args(["run", cfg.to_str().unwrap()])
        .env("TORBESOV_OUT", dir.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("besov-norm.report.json").exists());
    let _ = fs::remove_dir_all(dir);
}
