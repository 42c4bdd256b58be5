//! Acceptance: determinism of the command-line outputs, plus exit-code and
//! output-schema checks driven through the real binary.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotator-lab"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn criterion_10_determinism() {
    let base = std::env::temp_dir().join(format!("rotator-det-{}", std::process::id()));
    let (dir_a, dir_b) = (base.join("a"), base.join("b"));

    let config = base.join("scenario.conf");
    std::fs::create_dir_all(&base).unwrap();
    std::fs::write(
        &config,
        "family = fundamental+\nprofile = sin:1,0.5,1\nt_final = 5\ndt = 1e-3\nseed = 42\n",
    )
    .unwrap();

    for dir in [&dir_a, &dir_b] {
        let status = bin()
            .args(["--config", config.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
            .arg("simulate")
            .status()
            .unwrap();
        assert!(status.success());
    }

    let csv_a = read(&dir_a, "trajectory.csv");
    assert_eq!(csv_a, read(&dir_b, "trajectory.csv"), "CSV outputs differ between runs");
    assert_eq!(
        read(&dir_a, "run_manifest.json"),
        read(&dir_b, "run_manifest.json"),
        "manifests differ between runs"
    );
    assert!(!csv_a.is_empty());

    std::fs::remove_dir_all(&base).ok();
    println!("criterion 10 determinism: PASS (byte-identical CSV and manifest)");
}

#[test]
fn usage_error_exits_2() {
    let out = bin().arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("family"), "diagnostic should name the missing field: {msg}");
}

#[test]
fn corruption_check_exits_1() {
    let dir = std::env::temp_dir().join(format!("rotator-corrupt-{}", std::process::id()));
    let out = bin()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["verify", "--family", "fundamental+", "--inject-corruption"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn quadratic_sweep_emits_monotone_squared_rapidity() {
    let dir = std::env::temp_dir().join(format!("rotator-sweep-{}", std::process::id()));
    let status = bin()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["sweep", "--family", "quadratic", "--q-min", "0.1", "--q-max", "0.9"])
        .args(["--points", "9"])
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut last = 0.0;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let q: f64 = fields[0].parse().unwrap();
        let tanh_psi: f64 = fields[7].parse().unwrap();
        assert!((tanh_psi - q * q).abs() < 1e-12, "tanh psi != Q^2 at Q = {q}");
        assert!(tanh_psi > last);
        last = tanh_psi;
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_point_sweep_matches_simulate_summary() {
    let dir = std::env::temp_dir().join(format!("rotator-single-{}", std::process::id()));
    let status = bin()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["sweep", "--family", "quadratic", "--q-min", "0.5", "--q-max", "0.6"])
        .args(["--points", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["simulate", "--family", "quadratic", "--Q", "0.5", "--T", "2", "--dt", "1e-3"])
        .status()
        .unwrap();
    assert!(status.success());

    let sweep = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let row: Vec<&str> = sweep.lines().nth(1).unwrap().split(',').collect();
    let sweep_tanh: f64 = row[7].parse().unwrap();

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run_manifest.json")).unwrap())
            .unwrap();
    let sim_tanh = manifest["tanh_psi_mean"].as_f64().unwrap();
    assert!((sweep_tanh - sim_tanh).abs() < 1e-9, "{sweep_tanh} vs {sim_tanh}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fundamental_profile_sweep_shares_casimirs_but_not_positions() {
    let dir = std::env::temp_dir().join(format!("rotator-profiles-{}", std::process::id()));
    let status = bin()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["sweep", "--family", "fundamental+", "--T", "10", "--dt", "1e-3"])
        .args(["--profiles", "const:1.0;sin:1,0.5,1"])
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let c_m: f64 = row[0].parse().unwrap();
        let c_j: f64 = row[1].parse().unwrap();
        assert!((c_m - 1.0).abs() < 1e-9 && (c_j - 1.0).abs() < 1e-9);
    }
    let separation: f64 = rows[1][3].parse().unwrap();
    assert!(separation > 0.1, "profiles should separate, got {separation}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_var_overrides_output_directory() {
    let dir = std::env::temp_dir().join(format!("rotator-env-{}", std::process::id()));
    let status = bin()
        .env("ROTATOR_OUT_DIR", dir.to_str().unwrap())
        .args(["simulate", "--family", "quadratic", "--Q", "0.5", "--T", "1", "--dt", "1e-2"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("trajectory.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}
