use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gfaoi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfaoi")).args(args).current_dir(dir).env_remove("GFAOI_OUT_DIR").output().unwrap()
}

const HEADER: &str = "sweep_value,scheme,evaluator,aoi_mean_seconds,aoi_stderr,p_fail,ptx_used,seed,frames";

#[test]
fn preset_writes_one_csv_per_series_and_evaluator() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfaoi(&["--preset", "sweep-slots", "--out", "res/slots", "--svg"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let noma = fs::read_to_string(dir.path().join("res/slots-noma-k4-adaptive-analytical.csv")).unwrap();
    let mut lines = noma.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 30);
    assert!(dir.path().join("res/slots-oma-adaptive-analytical.csv").exists());
    assert!(fs::read_to_string(dir.path().join("res/slots.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn simulated_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
        "preset": "custom",
        "base": {"num_users": 6, "slots_per_frame": 2, "slot_duration": 6, "num_levels": 2,
                 "tx_power": 100, "target_rate": 0.5, "scheme": "noma", "tx_policy": "adaptive_noma"},
        "sweep": {"variable": "ptx", "values": [0.2, 0.4]},
        "evaluator": "both",
        "frames": 20000
    }"#;
    fs::write(dir.path().join("spec.json"), spec).unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = gfaoi(&["--config", "spec.json", "--out", name, "--seed", "7"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(fs::read(dir.path().join(format!("{name}-noma-simulated.csv"))).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs.remove(0)).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0.2");
    assert_eq!(&row[7..], ["7", "20000"]);
    assert!(row[4].parse::<f64>().unwrap() > 0.0);
    assert!(dir.path().join("a-noma-analytical.csv").exists());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), r#"{"preset": "sweep-users", "evaluator": "simulated", "frames": 5}"#)
        .unwrap();
    let out = gfaoi(&["--config", "s.json", "--evaluator", "analytical", "--out", "x"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("x-oma-fixed-analytical.csv").exists());
    assert!(!dir.path().join("x-oma-fixed-simulated.csv").exists());
}

#[test]
fn default_output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gfaoi"))
        .args(["--preset", "validate-oracle"])
        .env("GFAOI_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = fs::read_to_string(dir.path().join("env/validate-oracle-oracle.csv")).unwrap();
    assert!(table.starts_with("remaining,levels,ptx,entry,closed_form,enumerated,abs_diff"));
}

#[test]
fn invalid_requests_fail() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"preset": "sweep-users", "sweep": {"variable": "slots", "values": [1]}}"#,
    )
    .unwrap();
    assert!(!gfaoi(&["--config", "bad.json"], dir.path()).status.success());
    fs::write(dir.path().join("junk.json"), "not json").unwrap();
    assert!(!gfaoi(&["--config", "junk.json"], dir.path()).status.success());
    assert!(!gfaoi(&[], dir.path()).status.success());
    fs::write(dir.path().join("file"), "").unwrap();
    let out = gfaoi(&["--preset", "sweep-slots", "--out", "file/sub/x"], dir.path());
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn validation_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfaoi(&["--validate", "constants"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,measured,bound,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|l| l.ends_with(",pass")));
    assert!(rows[0].starts_with("eta,1.664"));
}
