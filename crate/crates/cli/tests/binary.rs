use std::path::Path;
use std::process::Command;

fn etpd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_etpd"))
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn validate_full_config_exits_zero() {
    let out = etpd(&["validate", "--config", "configs/full.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(stdout.contains("Assumption 2(ii)"));
}

#[test]
fn config_errors_exit_two() {
    let out = etpd(&["validate", "--set", "horizon=10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.n"));

    let out = etpd(&["validate", "--config", "configs/smoke.toml", "--set", "no.such.key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such.key"));
}

#[test]
fn failed_assumption_exits_three() {
    let out = etpd(&["validate", "--config", "configs/smoke.toml", "--set", "schedule.theta3=-0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL schedule parameters"), "{stdout}");
}

#[test]
fn run_writes_outputs_and_respects_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpd(&[
        "run",
        "--config",
        "configs/smoke.toml",
        "--set",
        "horizon=20",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(csv.starts_with("# seed = 3\n# horizon = 20\n"));
    assert!(dir.path().join("summary.txt").exists());
}
