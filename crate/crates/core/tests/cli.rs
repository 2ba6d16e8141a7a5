use std::fs;
use std::process::{Command, Output};

fn stochlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochlearn"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn cda_writes_dot_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = stochlearn(&["cda", "--game", "g3", "--kernel", "ml", "-t", "1", "-o", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["cda"].is_array() || report["cda"].is_object());
    let dots: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "dot"))
        .collect();
    assert!(!dots.is_empty());
    let text: String = dots.iter().map(|e| fs::read_to_string(e.path()).unwrap()).collect();
    assert!(text.contains("H_e=3, H_m=2"));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn simulate_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlearn(&["simulate", "--game", "g2", "-t", "1", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn simulate_trace_has_requested_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlearn(&[
        "simulate", "--game", "g2", "--kernel", "lll", "-t", "0.5", "--seed", "3", "--steps", "50", "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().starts_with("trace_"))
        .expect("trace written");
    let text = fs::read_to_string(csv.path()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,state_index,player,proposed_action,accepted,potential"));
    assert_eq!(lines.count(), 51);
}

#[test]
fn missing_temperature_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlearn(&["stationary", "--game", "g2", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn strict_mode_passes_on_clean_game() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlearn(&[
        "stationary", "--game", "g2", "-t", "0.5", "-t", "1", "--strict", "-o", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("stationary_T0.5.csv").exists());
}

#[test]
fn coverage_fixture_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("cov.toml");
    let o = stochlearn(&[
        "coverage-gen", "--d", "8", "--n", "3", "--alpha", "0.2", "--radii", "0,3", "--seed", "5", "-o",
        fixture.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let o = stochlearn(&[
        "zerocost", "--fixture", fixture.to_str().unwrap(), "-t", "1", "-o", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("report.json").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "temperatures = [1.0]\nbogus = 1\n[game]\nbuiltin = \"g2\"\n").unwrap();
    let o = stochlearn(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_experiment_config_passes_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/g3_experiment.toml");
    let o = stochlearn(&["run", "--config", cfg, "--strict", "-o", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert!(dir.path().join("cda_ml_level1.dot").exists());
}
