use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_anticoncentration-lab"));
    c.env_remove("ANTICONCENTRATION_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    lab().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

fn run_experiment(name: &str, config: &Path, out: &Path, workers: &str) -> Value {
    let o = run(&[name, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
    assert_eq!(code(&o), 0, "{name} failed: {}", stderr(&o));
    read_json(&out.join("manifest.json"))
}

const RTN: &str = r#"{
  "experiment": "rtn",
  "seed": 5,
  "params": {"ensemble": "unitary", "n": [4, 6, 8], "t_max": 12, "contraction": {"method": "exact"}}
}"#;

#[test]
fn validate_accepts_a_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "rtn.json", RTN);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
}

#[test]
fn odd_size_for_the_replica_network() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "odd.json", &RTN.replace("[4, 6, 8]", "[4, 7]"));
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("params.n[1]") && err.contains("N = 7") && err.contains("even"), "{err}");
}

#[test]
fn oversized_statevector_names_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "simulate", "seed": 1, "params": {
        "circuit": {"architecture": "brickwork", "n": 40, "depth": 4},
        "realizations": 1, "sampling": "full_enumeration"}}"#;
    let p = write_config(dir.path(), "big.json", body);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("2^26"), "{}", stderr(&o));
    let o = run(&["simulate", "--config", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn schema_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    let body = "{\n  \"experiment\": \"rpm\",\n  \"seed\": 1,\n  \"params\": {\"epsilon\": 0.5, \"t\": [2], \"n\": [4], \"k\": [2],\n    \"extra\": true}\n}\n";
    let p = write_config(dir.path(), "extra.json", body);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 5") && stderr(&o).contains("extra"), "{}", stderr(&o));

    let p = write_config(dir.path(), "noseed.json", r#"{"experiment": "rpm", "params": {"epsilon": 0.5, "t": [2], "n": [4], "k": [2]}}"#);
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"));

    let p = write_config(dir.path(), "bad.json", "{\"experiment\": \"rpm\", \"seed\": 1,");
    let o = run(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let o = run(&["rtn", "--config", write_config(dir.path(), "rtn.json", RTN).to_str().unwrap(), "--workers", "0"]);
    assert_eq!(code(&o), 2);
    let o = run(&["rpm", "--config", dir.path().join("rtn.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "experiment mismatch");
}

#[test]
fn manifest_hashes_match_and_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "simulate", "seed": 11, "params": {
        "circuit": {"architecture": "brickwork", "n": 8, "depth": 5},
        "realizations": 6, "sampling": {"uniform_bitstrings": 50}}}"#;
    let p = write_config(dir.path(), "sim.json", body);
    let a = run_experiment("simulate", &p, &dir.path().join("a"), "1");
    let b = run_experiment("simulate", &p, &dir.path().join("b"), "3");
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["config_digest"], b["config_digest"]);
    for f in a["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.path().join("a").join(f["file"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), anticoncentration::persist::sha256_hex(&bytes));
    }
    let files: Vec<&str> = a["outputs"].as_array().unwrap().iter().map(|f| f["file"].as_str().unwrap()).collect();
    for expected in ["overlaps.csv", "overlaps.csv.meta.json", "realizations.csv", "summary.json"] {
        assert!(files.contains(&expected), "{files:?}");
    }

    // a different seed changes the samples
    let o = run(&["simulate", "--config", p.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap(), "--seed", "12"]);
    assert_eq!(code(&o), 0);
    let c = read_json(&dir.path().join("c/manifest.json"));
    assert_ne!(a["outputs"], c["outputs"]);

    // the environment variable supplies the default worker count
    let o = lab()
        .env("ANTICONCENTRATION_WORKERS", "2")
        .args(["simulate", "--config", p.to_str().unwrap(), "--out", dir.path().join("d").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let d = read_json(&dir.path().join("d/manifest.json"));
    assert_eq!(d["workers"], 2);
    assert_eq!(a["outputs"], d["outputs"]);
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "simulate", "seed": 2, "params": {
        "circuit": {"architecture": "brickwork", "n": 10, "depth": 8},
        "realizations": 4, "sampling": "full_enumeration"}}"#;
    let p = write_config(dir.path(), "sim.json", body);
    run_experiment("simulate", &p, &dir.path().join("sim"), "1");
    let body = r#"{"experiment": "fit", "seed": 2, "params": {"input": "sim/overlaps.csv", "ensemble": "unitary", "mode": "alpha_beta"}}"#;
    let p = write_config(dir.path(), "fit.json", body);
    let m = run_experiment("fit", &p, &dir.path().join("fit"), "1");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    let fit = read_json(&dir.path().join("fit/fit.json"));
    assert_eq!(fit["fit"]["n_samples"], 4 * 1024);
    let alpha = fit["fit"]["alpha_hat"].as_f64().unwrap();
    assert!(alpha > 0.0 && alpha < 1.0, "{alpha}");
    let pdf = fs::read_to_string(dir.path().join("fit/pdf.csv")).unwrap();
    assert!(pdf.starts_with("omega,pdf,cdf\n"));

    let missing = write_config(dir.path(), "missing.json", &body.replace("sim/overlaps.csv", "nowhere.csv"));
    assert_eq!(code(&run(&["validate", "--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn closed_form_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("haar-ipr", r#"{"ensemble": "orthogonal", "dims": [2, 16, 1024], "k_max": 4}"#, "haar_ipr.csv", 13),
        ("rmps", r#"{"ensemble": "unitary", "d": 2, "chi": [2, 4], "n": [4, 6], "k_max": 3, "monte_carlo_realizations": 50}"#, "rmps.csv", 13),
        ("rpm", r#"{"epsilon": 0.5, "t": [2, 4], "n": [4, 8], "k": [2, 3]}"#, "rpm.csv", 9),
    ];
    for (name, params, file, lines) in cases {
        let body = format!(r#"{{"experiment": "{name}", "seed": 9, "params": {params}}}"#);
        let p = write_config(dir.path(), &format!("{name}.json"), &body);
        run_experiment(name, &p, &dir.path().join(name), "1");
        let text = fs::read_to_string(dir.path().join(name).join(file)).unwrap();
        assert_eq!(text.lines().count(), lines, "{name}:\n{text}");
    }
}

#[test]
fn small_xeb_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "xeb", "seed": 4, "params": {"n": 6, "depths": [4, 6], "epsilon_n": [0.0, 0.3],
        "realizations": 4, "trajectories": 10, "bitstrings_per_trajectory": 10}}"#;
    let p = write_config(dir.path(), "xeb.json", body);
    run_experiment("xeb", &p, &dir.path().join("x"), "1");
    let reports = read_json(&dir.path().join("x/xeb.json"));
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    // too few bitstrings for a precise estimate
    assert!(reports.iter().all(|r| !r["warnings"].as_array().unwrap().is_empty()));
}

/// ΔS₂ collapse at N ∈ {16, 20, 24}. At these sizes the late-time decay is
/// still N dependent, so τ sits somewhat below its large-N value; the
/// per-size fits bracket the pooled one.
#[test]
fn collapse_example() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "collapse", "seed": 0, "params": {"ensemble": "unitary", "n": [16, 20, 24], "t_max": 30,
        "contraction": {"method": "exact"}}}"#;
    let p = write_config(dir.path(), "collapse.json", body);
    run_experiment("collapse", &p, &dir.path().join("c"), "1");
    let fit = read_json(&dir.path().join("c/decay_fit.json"));
    let tau = fit["tau"].as_f64().unwrap();
    let per: Vec<f64> = fit["per_size"].as_array().unwrap().iter().map(|f| f["tau"].as_f64().unwrap()).collect();
    println!("pooled tau = {tau:.4}, per size = {per:?}");
    let (lo, hi) = per.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    assert!(tau >= lo - 1e-9 && tau <= hi + 1e-9);
    let csv = fs::read_to_string(dir.path().join("c/delta_s2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 31);
    assert!(dir.path().join("c/delta_s2.csv.meta.json").is_file());
}

/// Overlaps of N = 20, t = 4 brickwork circuits from 4·10⁵ uniformly drawn
/// bitstrings resolve a positive β.
#[test]
fn distribution_example() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "distribution", "seed": 3, "params": {
        "circuit": {"architecture": "brickwork", "n": 20, "depth": 4},
        "realizations": 40, "samples_per_realization": 10000}}"#;
    let p = write_config(dir.path(), "dist.json", body);
    run_experiment("distribution", &p, &dir.path().join("d"), "1");
    let fit = read_json(&dir.path().join("d/fit.json"));
    let (b, se) = (fit["fit"]["beta_hat"].as_f64().unwrap(), fit["fit"]["beta_std_error"].as_f64().unwrap());
    println!("alpha = {}, beta = {b} ± {se}", fit["fit"]["alpha_hat"]);
    assert_eq!(fit["fit"]["n_samples"], 400_000);
    assert!(b > 3.0 * se, "β̂ = {b} ± {se}");
    let hist = fs::read_to_string(dir.path().join("d/histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_low,bin_high,count,density,model_density\n"));
    assert_eq!(hist.lines().count(), 61);
}
