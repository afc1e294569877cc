use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fqdyn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqdyn")).args(args).arg("--out").arg(out).output().unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn summary_schema_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdyn(&["dim-estimate", "--workers", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["command"], "dim-estimate");
    for key in ["config_echo", "checks", "fitted_constants"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    let echo = s["config_echo"].as_object().unwrap();
    assert!(!echo.contains_key("workers") && !echo.contains_key("out"));
    assert_eq!(echo["deltas"], "0,0.5,1");
    for c in s["checks"].as_array().unwrap() {
        for key in ["name", "value", "bound", "pass"] {
            assert!(c.get(key).is_some());
        }
    }
    assert_eq!(s["fitted_constants"]["target_delta_1"], 0.5);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS box_slope_delta_1: value 0.5 bound 0.85"), "{stdout}");
    assert!(dir.path().join("plots/box_slope_delta_1.dat").is_file());
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("delta,steps,radius_exp,count,slope,target\n"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# trajectory of a badly approximable s\ns = cf(T | T)\nsteps = 12\nexpect = divergent\n").unwrap();
    let out = dir.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_fqdyn"))
        .args(["trajectory", "--config"])
        .arg(&cfg)
        .args(["--set", "steps=10", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    // the orbit stays bounded, so the expectation fails
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["config_echo"]["steps"], "10");
    assert_eq!(s["checks"][0]["value"], "bounded");
    assert_eq!(s["checks"][0]["pass"], false);
    let o = fqdyn(&["trajectory", "--config", cfg.to_str().unwrap(), "--expect", "bounded"], &out);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "q = 2\nthis is not an assignment\n").unwrap();
    assert_eq!(fqdyn(&["verify-hodge", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["verify-hodge", "--set", "nosuchkey=1"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["verify-hodge", "--q", "17"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["covering", "--delta", "2"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["no-such-command"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["trajectory", "--s", "T +* 1"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdyn(&["verify-hodge", "--workers", "0"], dir.path()).status.code(), Some(64));
}

#[test]
fn cap_and_precision_exit_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdyn(&["verify-measure", "--q", "7", "--d-max", "4"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let s = summary(dir.path());
    assert!(s["error"].as_str().unwrap().contains("exceeds the cap"));
    let o = fqdyn(&["trajectory", "--s", "cf(T | T)", "--precision", "10"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(summary(dir.path())["error"].as_str().unwrap().contains("precision"));
}

#[test]
fn vacuous_trials_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdyn(&["verify-hodge", "--trials", "0", "--jacobi-trials", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path());
    let checks = s["checks"].as_array().unwrap();
    let norm = checks.iter().find(|c| c["name"] == "hodge_norm").unwrap();
    assert_eq!(norm["vacuous"], true);
    let counter = checks.iter().find(|c| c["name"] == "hodge_counterexample").unwrap();
    assert!(counter.get("vacuous").is_none());
}

#[test]
fn zero_trajectory_alpha_grows() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdyn(&["trajectory", "--s", "0", "--steps", "12", "--expect", "divergent"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let alpha: Vec<i64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(alpha.len(), 12);
    assert!(alpha.windows(2).all(|w| w[1] > w[0]), "{alpha:?}");
}

#[test]
fn dani_zero_passes_every_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdyn(&["dani-scan", "--s", "0", "--expect", "singular"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let table: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("dani.json")).unwrap()).unwrap();
    let rows = table.as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["passes"] == true));
    let o = fqdyn(&["dani-scan", "--s", "cf(0 | T+1)", "--expect", "nonsingular"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn reports_overwrite_stale_plots() {
    let dir = tempfile::tempdir().unwrap();
    fqdyn(&["dim-estimate"], dir.path());
    assert!(dir.path().join("plots/box_slope_delta_0.dat").is_file());
    fqdyn(&["trajectory"], dir.path());
    assert!(!dir.path().join("plots/box_slope_delta_0.dat").exists());
    assert!(dir.path().join("plots/alpha_tilde.dat").is_file());
}

#[test]
fn help_exits_zero() {
    let o = Command::new(env!("CARGO_BIN_EXE_fqdyn")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("dim-estimate"));
}
