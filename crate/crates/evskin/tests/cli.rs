use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evskin_core::events::{meander_grid, SensorLayout};
use evskin_core::synth::SynthSpec;

fn evskin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evskin")).args(args).arg("--log-level").arg("warn").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn small_spec() -> SynthSpec {
    let layout =
        SensorLayout { grid_points: meander_grid(3, 2, 8.0, (30.0, 40.0)), repetitions: 2, ..SensorLayout::default() };
    SynthSpec {
        layout,
        burst_events_per_press_per_camera: 3_000.0,
        background_rate_per_camera: 500.0,
        seed: 3,
        ..SynthSpec::default()
    }
}

fn write_spec(dir: &Path, spec: &SynthSpec) -> PathBuf {
    let p = dir.join("spec.json");
    std::fs::write(&p, serde_json::to_string(spec).unwrap()).unwrap();
    p
}

/// Simulates `spec` into `dir/data` and returns the generated run config.
fn simulate(dir: &Path, spec: &SynthSpec) -> PathBuf {
    let spec_path = write_spec(dir, spec);
    let data = dir.join("data");
    let o = evskin(&["simulate", "--config", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    data.join("run_config.json")
}

#[test]
fn simulate_then_localize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate(dir.path(), &small_spec());
    let out = dir.path().join("loc");
    let o = evskin(&["localize", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("localization.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(eval["schema_version"], 1);
    assert_eq!(eval["evaluation"]["n_valid"], 12);
    assert!(eval["evaluation"]["rmse_mm"].as_f64().unwrap() < 0.1);
}

#[test]
fn missing_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = evskin(&["localize", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = evskin(&["localize", "--config", "/nonexistent/run.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_config_is_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n \"seed\": }").unwrap();
    let o = evskin(&["localize", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn missing_event_file_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate(dir.path(), &small_spec());
    std::fs::remove_file(dir.path().join("data/cam2.csv")).unwrap();
    let o = evskin(&["localize", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn no_sync_taps_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec();
    spec.taps.enabled = false;
    let cfg = simulate(dir.path(), &spec);
    let o = evskin(&["localize", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn no_press_events_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { burst_events_per_press_per_camera: 0.0, ..small_spec() };
    let cfg = simulate(dir.path(), &spec);
    let o = evskin(&["localize", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn too_few_training_presses_is_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate(dir.path(), &small_spec());
    let o = evskin(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ablate_and_latency_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate(dir.path(), &small_spec());
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("abl");
    let o =
        evskin(&["ablate", "--config", cfg, "--out", out.to_str().unwrap(), "--factors", "1,4,16", "--seeds", "1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 1 + 6);
    assert_eq!(std::fs::read_to_string(out.join("sweep_curve.csv")).unwrap().lines().count(), 1 + 3);

    let out = dir.path().join("lat");
    let o = evskin(&["latency", "--config", cfg, "--out", out.to_str().unwrap(), "--h", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("onsets.csv")).unwrap().lines().count(), 1 + 12);
    assert!(!out.join("roc.csv").exists());
}

#[test]
fn seed_flag_overrides_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &small_spec());
    let out = dir.path().join("s");
    let o = evskin(&["simulate", "--config", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(code(&o), 0);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("truth_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
}

#[test]
fn excluded_sequences_leave_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        layout: SensorLayout {
            grid_points: meander_grid(4, 3, 8.0, (30.0, 30.0)),
            repetitions: 2,
            ..SensorLayout::default()
        },
        ..small_spec()
    };
    let cfg = simulate(dir.path(), &spec);
    let calibrate = |out: &str| {
        evskin(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join(out).to_str().unwrap()])
    };
    let o = calibrate("all");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let body: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("all/calibrated_models.json")).unwrap()).unwrap();
    assert_eq!(body["n_observations"], 12);

    let mut run: serde_json::Value = serde_json::from_slice(&std::fs::read(&cfg).unwrap()).unwrap();
    run["calibration"]["excluded_sequences"] = serde_json::json!([0, 5, 11]);
    std::fs::write(&cfg, serde_json::to_vec(&run).unwrap()).unwrap();
    assert_eq!(code(&calibrate("fewer")), 5);
}
