//! End-to-end checks of the command line: artifact schemas, strict
//! parsing, config-file precedence, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_reeblab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn reeblab")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("reeblab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn spectrum_artifacts_and_manifest() {
    let dir = tempdir("spectrum");
    let out = run_in(&dir, &["spectrum", "--lambda-max", "10", "--out", "spec.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("spec.json")).unwrap()).unwrap();
    assert_eq!(doc["model"], "heisenberg");
    assert!(doc["entries"].as_array().unwrap().len() > 5);
    // CSV mirror and manifest exist
    let csv = std::fs::read_to_string(dir.join("spec.csv")).unwrap();
    assert!(csv.starts_with("lambda,mult,sector,l,m\n"));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("spec.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 2);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn determinism_byte_identical_artifacts() {
    let dir_a = tempdir("det-a");
    let dir_b = tempdir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = run_in(
            dir,
            &[
                "geodesic",
                "--q0",
                "0.1,0.2,0",
                "--xi",
                "0.6,0.8,1.5",
                "--t-max",
                "5",
                "--samples",
                "200",
                "--seed",
                "7",
                "--out",
                "traj.csv",
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir_a.join("traj.csv")).unwrap();
    let b = std::fs::read(dir_b.join("traj.csv")).unwrap();
    assert_eq!(a, b, "geodesic artifacts differ between identical runs");

    for dir in [&dir_a, &dir_b] {
        let out = run_in(dir, &["periodic", "--k-max", "3", "--out", "orbits.json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir_a.join("orbits.json")).unwrap();
    let b = std::fs::read(dir_b.join("orbits.json")).unwrap();
    assert_eq!(a, b, "periodic artifacts differ between identical runs");
}

#[test]
fn periodic_json_schema() {
    let dir = tempdir("periodic");
    let out = run_in(&dir, &["periodic", "--k-max", "2", "--out", "orbits.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("orbits.json")).unwrap()).unwrap();
    assert_eq!(doc["model"], "heisenberg");
    assert!((doc["T0_reeb"].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-12);
    let orbits = doc["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), 2);
    for (i, orbit) in orbits.iter().enumerate() {
        assert_eq!(orbit["k"].as_u64().unwrap(), i as u64 + 1);
        assert!(orbit["length"].as_f64().unwrap() > 0.0);
        assert!(orbit["residual"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn unknown_flag_rejected() {
    let dir = tempdir("badflag");
    let out = run_in(&dir, &["spectrum", "--lambda-maxx", "10"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda-maxx"), "stderr: {err}");
}

#[test]
fn invalid_value_names_the_key() {
    let dir = tempdir("badval");
    let out = run_in(&dir, &["geodesic", "--tol", "-1"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tol"), "stderr: {err}");
}

#[test]
fn config_file_defaults_and_flag_override() {
    let dir = tempdir("config");
    std::fs::write(
        dir.join("run.conf"),
        "lambda-max = 30\nmodel = heisenberg\n# comment\n",
    )
    .unwrap();
    // flag overrides the file value
    let out = run_in(
        &dir,
        &[
            "spectrum",
            "--config",
            "run.conf",
            "--lambda-max",
            "50",
            "--print-config",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(echo["config"]["lambda_max"].as_f64().unwrap(), 50.0);
    // file value used when no flag is given
    let out = run_in(&dir, &["spectrum", "--config", "run.conf", "--print-config"]);
    let echo: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(echo["config"]["lambda_max"].as_f64().unwrap(), 30.0);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempdir("badkey");
    std::fs::write(dir.join("run.conf"), "lambda-maxx = 10\n").unwrap();
    let out = run_in(&dir, &["spectrum", "--config", "run.conf"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda-maxx"), "stderr: {err}");
}

#[test]
fn out_dir_env_var_sets_default_directory() {
    let dir = tempdir("envout");
    let out = Command::new(bin())
        .current_dir(&dir)
        .env("REEBLAB_OUT_DIR", dir.join("artifacts"))
        .args(["weyl", "--lambda-max", "100", "--grid-points", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("artifacts/weyl.csv").exists());
}

#[test]
fn conjecture_reports_three_matching_periods() {
    let dir = tempdir("conjecture");
    let out = run_in(&dir, &["conjecture", "--k-max", "5", "--out", "conj.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("conj.json")).unwrap()).unwrap();
    let tau = std::f64::consts::TAU;
    for key in ["t0_geometry", "t0_length_fit", "t0_trace"] {
        let v = doc[key].as_f64().unwrap();
        assert!((v - tau).abs() < 1e-6, "{key} = {v}");
    }
    assert!(doc["max_pairwise_gap"].as_f64().unwrap() < 1e-6);
}

#[test]
fn kepler_geodesic_runs() {
    let dir = tempdir("kepler");
    let out = run_in(
        &dir,
        &[
            "geodesic",
            "--model",
            "kepler",
            "--q0",
            "1,0.5,0.3",
            "--xi",
            "0.4,0.3,0.2",
            "--t-max",
            "2",
            "--samples",
            "50",
            "--out",
            "kepler.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("kepler.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn kepler_origin_rejected_with_report() {
    let dir = tempdir("kepler-bad");
    let out = run_in(
        &dir,
        &["geodesic", "--model", "kepler", "--q0", "0,0,0", "--xi", "1,0,0"],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let report: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert!(report["error"].as_str().unwrap().contains("chart"));
}
