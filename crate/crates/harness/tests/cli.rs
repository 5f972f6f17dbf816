use geodescent_harness::cli::run;
use geodescent_harness::mean::{CENTER_FILE, METADATA_FILE, TRACE_FILE, VALIDATION_FILE};
use geodescent_harness::{EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn mean(config: &str, out: &Path, extra: &[&str]) -> i32 {
    let out = out.display().to_string();
    let mut args = vec!["geodescent", "mean", "--config", config, "--out", &out];
    args.extend_from_slice(extra);
    run(args)
}

fn center(out: &Path) -> Vec<f64> {
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join(CENTER_FILE)).unwrap()).unwrap();
    serde_json::from_value(v["center"]["coords"].clone()).unwrap()
}

#[test]
fn euclidean_fixture_gives_weighted_mean() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mean(&fixture("euclid3.toml"), dir.path(), &[]), EXIT_OK);
    let c = center(dir.path());
    assert!((c[0] - 0.75).abs() < 1e-12 && (c[1] - 1.5).abs() < 1e-12, "{c:?}");
    for f in [TRACE_FILE, METADATA_FILE] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[data]\npath = \"nowhere.json\"\n").unwrap();
    assert_eq!(mean(&cfg.display().to_string(), dir.path(), &[]), EXIT_USAGE);
}

#[test]
fn spread_sphere_data_fail_validation_with_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mean(&fixture("sphere_spread.toml"), dir.path(), &[]), EXIT_VALIDATION);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(VALIDATION_FILE)).unwrap()).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["data_in_ball"]);
    assert!(!dir.path().join(CENTER_FILE).exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--rule", "constant", "--t0", "auto", "--seed", "5"];
    assert_eq!(mean(&fixture("hyperbolic.toml"), a.path(), &args), EXIT_OK);
    assert_eq!(mean(&fixture("hyperbolic.toml"), b.path(), &args), EXIT_OK);
    for f in [CENTER_FILE, TRACE_FILE] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    // The fixture asks for p = 1.5 with Armijo; a median with constant steps
    // is a different problem and must give a different center.
    assert_eq!(mean(&fixture("hyperbolic.toml"), dir.path(), &[]), EXIT_OK);
    let c15 = center(dir.path());
    assert_eq!(mean(&fixture("hyperbolic.toml"), dir.path(), &["--p", "2", "--beta", "0.3"]), EXIT_OK);
    let c2 = center(dir.path());
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(CENTER_FILE)).unwrap()).unwrap();
    assert_eq!(v["trace"]["beta"], 0.3);
    assert!(c15.iter().zip(&c2).any(|(a, b)| (a - b).abs() > 1e-6));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(["geodescent", "mean", "--config", &fixture("euclid3.toml"), "--rule", "newton"]), EXIT_USAGE);
    assert_eq!(run(["geodescent", "frobnicate"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mean(&fixture("euclid3.toml"), dir.path(), &["--beta", "1.5"]), EXIT_USAGE);
    assert_eq!(mean(&fixture("euclid3.toml"), dir.path(), &["--p", "0.5"]), EXIT_USAGE);
}

#[test]
fn csv_weights_off_by_a_little_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    fs::write(&data, "# manifold: euclidean 2\nx,y,weight\n0,0,0.3333334\n1,0,0.3333333\n0,1,0.3333333\n").unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[data]\npath = \"pts.csv\"\n[stop]\ngrad_tol = 1e-12\n").unwrap();
    assert_eq!(mean(&cfg.display().to_string(), &dir.path().join("out"), &[]), EXIT_OK);
    let c = center(&dir.path().join("out"));
    assert!((c[0] - 1.0 / 3.0).abs() < 1e-6 && (c[1] - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn invalid_points_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.json");
    fs::write(&data, r#"{"manifold": {"kind": "sphere", "dim": 1}, "points": [[1, 0], [0, 1.001]]}"#).unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[data]\npath = \"pts.json\"\n").unwrap();
    assert_eq!(mean(&cfg.display().to_string(), dir.path(), &[]), EXIT_VALIDATION);
}

#[test]
fn verify_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out: PathBuf = dir.path().join("report.json");
    let code = run(["geodescent", "verify", "--samples", "500", "--seed", "3", "--out", &out.display().to_string()]);
    assert_eq!(code, EXIT_OK);
    let report: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 9);
}

#[test]
fn bench_without_fixtures_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    fs::write(&cfg, "seed = 1\n").unwrap();
    assert_eq!(run(["geodescent", "bench", "--config", &cfg.display().to_string()]), EXIT_USAGE);
}
