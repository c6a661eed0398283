use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ehcontract::io::parse_config;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ehcontract"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_ten_types_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "solve",
            "--config",
            repo_config("ten_types.toml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "contract.csv",
        "feasibility.json",
        "config.resolved.toml",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    assert_eq!(csv_rows(&dir.path().join("contract.csv")).len(), 10);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["power_unit"], "mW");
    assert_eq!(manifest["output_paths"].as_array().unwrap().len(), 4);
}

#[test]
fn single_type_config_solves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k1.toml",
        "[scenario]\nn_eaps = 3\nk_types = 1\n",
    );
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("out/contract.csv"));
    assert_eq!(rows.len(), 1);
    let (theta, q, pi): (f64, f64, f64) = (
        rows[0][1].parse().unwrap(),
        rows[0][2].parse().unwrap(),
        rows[0][3].parse().unwrap(),
    );
    assert!(q > 0.0);
    assert!((pi - q * q / theta).abs() <= 1e-12 * pi);
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[scenario]\nn_eaps = 3\n");
    let out = run(
        &["solve", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_types"));
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[scenario]\nn_eaps = 3\nk_types = 2\nkappa = 1\n",
    );
    let out = run(
        &["sweep", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}

#[test]
fn single_point_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sweep",
            "--config",
            repo_config("welfare_sweep.toml").to_str().unwrap(),
            "--gamma-min",
            "100",
            "--gamma-max",
            "100",
            "--gamma-steps",
            "1",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 100.0);
}

#[test]
fn nonpositive_gamma_fails_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sweep",
            "--config",
            repo_config("welfare_sweep.toml").to_str().unwrap(),
            "--gamma-min",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn curves_row_counts_and_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "curves",
            "--config",
            repo_config("ten_types.toml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("curves.csv"));
    assert_eq!(rows.len(), 30);

    let all = write(
        dir.path(),
        "all.toml",
        "[scenario]\nn_eaps = 5\nk_types = 4\n[curves]\nprobe_types = [1, 2, 3, 4]\n",
    );
    let out = run(
        &["curves", "--config", all.to_str().unwrap()],
        &dir.path().join("all"),
    );
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("all/curves.csv"));
    assert_eq!(rows.len(), 16);
    // type 1 gets zero rent from its own item and no more from any other
    let type1: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "1")
        .map(|r| r[2].parse().unwrap())
        .collect();
    let own = type1[0];
    assert!(own.abs() <= 1e-10);
    assert!(type1.iter().all(|u| *u <= own + 1e-12));
}

#[test]
fn out_of_range_probe_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[scenario]\nn_eaps = 2\nk_types = 3\n[curves]\nprobe_types = [4]\n",
    );
    let out = run(
        &["curves", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "solve",
            "--config",
            repo_config("welfare_sweep.toml").to_str().unwrap(),
            "--seed",
            "42",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let echo = fs::read_to_string(dir.path().join("config.resolved.toml")).unwrap();
    let cfg = parse_config(&echo).unwrap();
    assert_eq!(cfg.scenario.rng_seed, 42);
    assert_eq!(cfg.to_toml(), echo);

    let again = dir.path().join("again");
    let out = run(
        &[
            "solve",
            "--config",
            dir.path().join("config.resolved.toml").to_str().unwrap(),
        ],
        &again,
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read(again.join("config.resolved.toml")).unwrap(),
        echo.as_bytes()
    );
    assert_eq!(
        fs::read(again.join("contract.csv")).unwrap(),
        fs::read(dir.path().join("contract.csv")).unwrap()
    );
}

#[test]
fn verify_accepts_solved_and_rejects_tampered_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "solve",
            "--config",
            repo_config("welfare_sweep.toml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let contract = dir.path().join("contract.csv");
    let out = run(
        &["verify", "--contract", contract.to_str().unwrap()],
        &dir.path().join("v1"),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad = write(
        dir.path(),
        "bad.csv",
        "type_index,theta,q,pi\n1,1,1,0.5\n2,2,1.1,2\n",
    );
    let out = run(
        &["verify", "--contract", bad.to_str().unwrap()],
        &dir.path().join("v2"),
    );
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("v2/feasibility.json")).unwrap()).unwrap();
    assert_eq!(report["feasible"], false);

    let garbage = write(dir.path(), "garbage.csv", "type_index,theta,q\n1,1,1\n");
    let out = run(
        &["verify", "--contract", garbage.to_str().unwrap()],
        &dir.path().join("v3"),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "sweep",
            "--config",
            repo_config("welfare_sweep.toml").to_str().unwrap(),
            "--gamma-steps",
            "2",
        ])
        .env("EHCONTRACT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(csv_rows(&dir.path().join("sweep.csv")).len(), 2);
}
