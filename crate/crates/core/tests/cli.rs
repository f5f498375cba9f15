//! End-to-end runs of the `fwm-pairs` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwm-pairs")).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn predict_simulate_analyze_closes_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = dir.path().join("run.cfg");
    let text = fwm_pairs::config::BUNDLED_CONFIG.replace("duration_s = 0.125", "duration_s = 0.05");
    std::fs::write(&cfg, text).unwrap();
    let cfg = cfg.to_str().unwrap();

    assert!(run(&["predict", "--config", cfg, "--out", out]).status.success());
    let prediction: serde_json::Value = serde_json::from_str(&read(dir.path(), "prediction.json")).unwrap();
    let r_true = prediction["pair_rate"].as_f64().unwrap();
    assert!(r_true > 0.0);

    let pred_path = dir.path().join("prediction.json");
    let sim = run(&["simulate", "--config", cfg, "--out", out, "--input", pred_path.to_str().unwrap(), "--seed", "5"]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let counts = read(dir.path(), "counts.csv");
    assert!(counts.starts_with("power_uW,ns_raw_hz,ns_cw_hz,ni_raw_hz,ni_cw_hz,c_raw_hz,cb_hz"));
    assert!(read(dir.path(), "histogram.csv").starts_with("bin_start_ps,probability"));

    let counts_path = dir.path().join("counts.csv");
    let ana = run(&["analyze", "--config", cfg, "--out", out, "--input", counts_path.to_str().unwrap()]);
    assert!(ana.status.success(), "{}", String::from_utf8_lossy(&ana.stderr));

    let records = fwm_pairs::coincidence::read_count_records(counts.as_bytes(), (400.0, 400.0)).unwrap();
    let rec = records.iter().find(|r| r.average_power > 0.0).unwrap();
    let a = fwm_pairs::coincidence::pair_rate(rec, 80e6).unwrap();
    let se = fwm_pairs::coincidence::pair_rate_standard_error(rec, 0.05, 8).unwrap();
    assert!((a.pair_rate - r_true).abs() < 3.0 * se, "{} vs {r_true} ± {se}", a.pair_rate);

    let analysis = read(dir.path(), "analysis.csv");
    let row: Vec<&str> = analysis.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap(), a.pair_rate);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let st = run(&["simulate", "--out", d.path().to_str().unwrap(), "--seed", "9"]);
        assert!(st.status.success());
    }
    for name in ["counts.csv", "histogram.csv", "truth.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn empty_input_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    std::fs::write(&input, "").unwrap();
    let out = dir.path().join("out");
    let res = run(&["analyze", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(res.stderr.trim_ascii()).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blue.cfg");
    let text = fwm_pairs::config::BUNDLED_CONFIG.replace("pump_wavelength_nm = 708.4", "pump_wavelength_nm = 650.0");
    std::fs::write(&cfg, text).unwrap();
    let res = run(&["predict", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(res.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "no_phase_match");
}

#[test]
fn bad_config_exits_two_naming_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "core_diameter_um = 2.0\n").unwrap();
    let res = run(&["dispersion", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("cladding_index"));
}

#[test]
fn analyze_bundled_matches_table() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["analyze", "--out", dir.path().to_str().unwrap(), "--format", "json"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "analysis.json")).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let r960 = rows[0]["r_hz"].as_f64().unwrap();
    assert!((r960 / 8.46e6 - 1.0).abs() < 0.10);
    assert!(rows[4]["contrast"].is_null());
}
