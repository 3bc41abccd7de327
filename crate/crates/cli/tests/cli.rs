use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_photonchip");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_reports_success_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["generate", "--alpha", "0", "--alpha", "pi/4", "--out", "g"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("g/generate.json"));
    let p: Vec<f64> = report
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["success_probability"].as_f64().unwrap())
        .collect();
    assert!((p[0] - 1.0 / 6.0).abs() < 1e-9);
    assert!((p[1] - 1.0 / 9.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("g/generate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn generate_from_netlist_file() {
    let dir = tempfile::tempdir().unwrap();
    let netlist = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/generation_core.json");
    let out = run(dir.path(), &["generate", "--netlist", netlist, "--alpha", "pi/8", "--out", "g"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("g/generate.json"));
    assert!((report[0]["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn manifest_hashes_echoed_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rates", "--seed", "9", "--out", "r"]);
    assert!(out.status.success());
    let manifest = read_json(&dir.path().join("r/manifest.json"));
    let config = std::fs::read(dir.path().join("r/config.json")).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&config)));
    assert_eq!(manifest["seed"].as_u64(), Some(9));
    assert_eq!(manifest["verb"].as_str(), Some("rates"));
    let curve = std::fs::read_to_string(dir.path().join("r/fraction_curve.csv")).unwrap();
    assert!(curve.starts_with("alpha_rad,fraction,predicted_rate_hz\n"));
}

#[test]
fn seeded_tomography_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| ["tomography", "--shots", "100000", "--seed", "11", "--alpha", "pi/8", "--out", o];
    assert!(run(dir.path(), &args("a")).status.success());
    assert!(run(dir.path(), &args("b")).status.success());
    for f in ["tomography.json", "counts_0.json", "rho_0.json", "config.json", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn finite_shot_tomography_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["tomography", "--shots", "1000", "--out", "t"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn model_projectors_improve_perturbed_chip_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ideal.json"), r#"{"tomography": {"model_projectors": false}}"#).unwrap();
    let common = ["tomography", "--chip-model", "spam", "--alpha", "pi/8", "--shots", "100000", "--seed", "3"];
    let with: Vec<&str> = common.iter().copied().chain(["--out", "with"]).collect();
    let without: Vec<&str> = common.iter().copied().chain(["--config", "ideal.json", "--out", "without"]).collect();
    assert!(run(dir.path(), &with).status.success());
    assert!(run(dir.path(), &without).status.success());
    let f = |d: &str| read_json(&dir.path().join(d).join("tomography.json"))[0]["fidelity_to_target"].as_f64().unwrap();
    assert!(f("with") > f("without"), "{} vs {}", f("with"), f("without"));
}

#[test]
fn calibrate_and_characterize() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"calibration": {"sweep_steps": 11, "epochs": 40}}"#).unwrap();
    let out = run(dir.path(), &["calibrate", "--config", "c.json", "--seed", "2", "--out", "cal"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dataset.csv", "fit_report.json", "chip_model.json", "trace.csv", "calibration.json"] {
        assert!(dir.path().join("cal").join(f).exists(), "{f}");
    }
    let out = run(dir.path(), &["characterize", "--chip-model", "cal/chip_model.json", "--out", "ch"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("ch/characterization.json"));
    assert!(report["fidelity"].as_f64().unwrap() > 0.999);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(dir.path(), args).status.code();
    assert_eq!(code(&["generate", "--alpha", "2", "--out", "x"]), Some(3));
    assert_eq!(code(&["validate-netlist", "missing.json"]), Some(5));
    std::fs::write(dir.path().join("bad.json"), r#"{"modes": 2}"#).unwrap();
    assert_eq!(code(&["validate-netlist", "bad.json"]), Some(3));
    assert_eq!(code(&["generate", "--no-such-flag"]), Some(2));
    assert_eq!(code(&["calibrate", "--out", "x"]), Some(3));
    std::fs::write(
        dir.path().join("diverge.json"),
        r#"{"calibration": {"learning_rate": 50.0, "final_lr_fraction": 1.0, "divergence_patience": 2, "epochs": 60, "sweep_steps": 11}}"#,
    )
    .unwrap();
    assert_eq!(code(&["calibrate", "--config", "diverge.json", "--seed", "1", "--out", "x"]), Some(4));
    let netlist = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/chip8.json");
    assert_eq!(code(&["validate-netlist", netlist]), Some(0));
}
