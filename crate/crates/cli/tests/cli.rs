use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use opo_cli::rows::{BifurcationRow, OracleRow, SpectraRow};
use opo_core::quantum::SpectrumValue;

fn opo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opo"))
        .args(args)
        .output()
        .expect("spawn opo")
}

fn read_rows<R: serde::de::DeserializeOwned>(path: &Path) -> Vec<R> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn bifurcation_reports_folds_and_pitchfork() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bif.csv");
    let o = opo(&["bifurcation", "--sigma", "2.8", "--delta", "0.6", "--points", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<BifurcationRow> = read_rows(&out);
    let find = |k: &str| rows.iter().find(|r| r.kind == k).unwrap().intensity;
    assert!((find("fold-") - 0.71010).abs() < 1e-5);
    assert!((find("fold+") - 1.68990).abs() < 1e-5);
    assert!((find("pb") - 14.8f64.sqrt()).abs() < 1e-12);
    assert_eq!(rows.iter().filter(|r| r.kind == "branch").count(), 50);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("bif.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "bifurcation");
    assert_eq!(manifest["config"]["sigma"], 2.8);
    assert_eq!(manifest["outputs"][0]["rows"], rows.len());
}

#[test]
fn bifurcation_rejects_asymmetric_detuning() {
    let o = opo(&["bifurcation", "--sigma", "2", "--delta-s", "0.3", "--delta-i", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectra_at_pitchfork() {
    let o = opo(&["spectra", "--sigma", "1", "--delta", "0.2", "--at", "pb"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<SpectraRow> = csv::Reader::from_reader(o.stdout.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 4);
    let get = |m: &str, q: &str| rows.iter().find(|r| r.mode == m && r.quadrature == q).unwrap().v;
    // 1 - 4(I - sigma) / (2I - r)^2 with I = sqrt(4.04), r = 2
    let i = 4.04f64.sqrt();
    let expected = 1.0 - 4.0 * (i - 1.0) / (2.0 * i - 2.0).powi(2);
    match get("phi-psi-", "X") {
        SpectrumValue::Finite(v) => assert!((v - expected).abs() < 1e-12, "{v} vs {expected}"),
        SpectrumValue::Infinite => panic!("finite expected"),
    }
    assert_eq!(get("phi-psi-", "Y"), SpectrumValue::Infinite);
    assert!(String::from_utf8_lossy(&o.stdout).contains(",inf"));
}

#[test]
fn spectra_engines_agree() {
    let base = ["spectra", "--sigma", "1.5", "--delta", "0.6", "--intensity", "1.2", "--omega-max", "2", "--omega-points", "5"];
    let closed = opo(&base);
    let mut args = base.to_vec();
    args.extend(["--engine", "projection"]);
    let proj = opo(&args);
    let parse = |o: &Output| -> Vec<SpectraRow> {
        csv::Reader::from_reader(o.stdout.as_slice()).deserialize().collect::<Result<_, _>>().unwrap()
    };
    let (a, b) = (parse(&closed), parse(&proj));
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), 5 * 4 * 2);
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (x.v.value(), y.v.value());
        assert!((x - y).abs() < 1e-9 * x.abs(), "{x} {y}");
    }
}

#[test]
fn absent_point_exit_code() {
    let o = opo(&["spectra", "--sigma", "3", "--delta", "0.2", "--at", "hb"]);
    assert_eq!(o.status.code(), Some(3));
    let o = opo(&["entanglement", "--sigma", "2", "--delta", "0.2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(opo(&["oracle", "--sigma", "0.5", "--trajectories", "0"]).status.code(), Some(2));
    assert_eq!(opo(&["spectra", "--sigma", "1", "--delta", "-0.2", "--at", "pb"]).status.code(), Some(2));
    assert_eq!(opo(&["spectra", "--sigma", "-1", "--delta", "0.2", "--at", "pb"]).status.code(), Some(2));
    assert_eq!(opo(&["spectra", "--sigma", "1", "--delta", "0.2", "--at", "pb", "--mode", "bogus"]).status.code(), Some(2));
    assert_eq!(opo(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn entanglement_sweep_in_order() {
    let o = opo(&["entanglement", "--sigma-min", "1.05", "--sigma-max", "1.35", "--sigma-points", "4", "--delta", "0.2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 4);
    let sigmas: Vec<f64> = rows.iter().map(|r| r["sigma"].as_f64().unwrap()).collect();
    assert!(sigmas.windows(2).all(|w| w[0] < w[1]));
    assert!(rows.iter().all(|r| r["E_N"].as_f64().unwrap() > 0.0));
}

fn small_oracle(seed: &str, out: &Path) -> Output {
    opo(&[
        "oracle", "--sigma", "0.5", "--trajectories", "3", "--t-max", "100", "--segment-len", "1024",
        "--seed", seed, "--omega-max", "1", "--omega-points", "2", "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn oracle_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    for (s, p) in [("5", &a), ("5", &b), ("6", &c)] {
        let o = small_oracle(s, p);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ba, bb, bc) = (fs::read(&a).unwrap(), fs::read(&b).unwrap(), fs::read(&c).unwrap());
    assert_eq!(ba, bb);
    assert_ne!(ba, bc);
    let rows: Vec<OracleRow> = read_rows(&a);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.n_trajectories == 3 && r.std_error > 0.0));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["extra"]["divergence_fraction"], 0.0);
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = opo(&["spectra", "--sigma", "1.2", "--delta", "0.2", "--at", "hb", "--omega-max", "3", "--omega-points", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<SpectraRow> = read_rows(&out);
    let bytes = opo_cli::output::render(&rows, opo_cli::args::Format::Csv).unwrap();
    assert_eq!(bytes, fs::read(&out).unwrap());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sigma": 1.0, "delta": 0.2, "at": "pb", "quadrature": ["X"]}"#).unwrap();
    let o = opo(&["spectra", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<SpectraRow> = csv::Reader::from_reader(o.stdout.as_slice()).deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.sigma == 1.0 && r.quadrature == "X"));
    // command line overrides the file
    let o = opo(&["spectra", "--config", cfg.to_str().unwrap(), "--sigma", "1.2", "--at", "hb"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<SpectraRow> = csv::Reader::from_reader(o.stdout.as_slice()).deserialize().collect::<Result<_, _>>().unwrap();
    assert!(rows.iter().all(|r| r.sigma == 1.2 && r.point == "hb"));
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let o = opo(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let o = opo(&["validate", "--perturb-jacobian", "0,2,1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let jac = report["suites"].as_array().unwrap().iter().find(|s| s["name"] == "jacobian-finite-difference").unwrap();
    assert_eq!(jac["passed"], false);
}
