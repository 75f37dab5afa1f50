use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn exu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exu"))
        .args(args)
        .output()
        .expect("exu runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exu-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn gaussian_document(n: usize, half: f64, k: f64) -> String {
    let dx = 2.0 * half / n as f64;
    let amps: Vec<String> = (0..n)
        .map(|j| {
            let x = -half + j as f64 * dx;
            let a = (-x * x / 4.0).exp();
            format!("[{}, {}]", a * (k * x).cos(), a * (k * x).sin())
        })
        .collect();
    format!(
        r#"{{"family": "grid", "grid": {{"n_points": {n}, "x_min": {}, "x_max": {half}}}, "amplitudes": [{}]}}"#,
        -half,
        amps.join(", ")
    )
}

#[test]
fn random_suite_passes_and_is_reproducible() {
    let args = [
        "verify",
        "--suite",
        "gaussian-random",
        "--n",
        "12",
        "--seed",
        "7",
        "--grid-n",
        "512",
    ];
    let a = exu(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let doc = json(&a);
    assert_eq!(doc["result"]["reports"].as_array().unwrap().len(), 12 * 4);
    assert_eq!(doc["config"]["seed"], 7);
    let b = exu(&args);
    assert_eq!(a.stdout, b.stdout);
    let other = exu(&[
        "verify",
        "--suite",
        "gaussian-random",
        "--n",
        "12",
        "--seed",
        "8",
        "--grid-n",
        "512",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn state_file_gives_one_report() {
    let path = scratch("gauss.json", &gaussian_document(128, 16.0, 1.5));
    let out = exu(&["verify", path.to_str().unwrap(), "--relation", "xp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = json(&out)["result"]["reports"].as_array().unwrap().clone();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["report"]["verdict"], "equality");
    assert!(reports[0]["report"]["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn malformed_json_exits_2_with_position() {
    let path = scratch("bad.json", "{\n  \"family\": \"grid\",\n  \"amplitudes\": [[1, 0],\n}");
    let out = exu(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn mismatched_relation_is_an_input_error() {
    let path = scratch("fock.json", r#"{"family": "fock", "amplitudes": [[0.6, 0], [0, 0.8]]}"#);
    assert_eq!(
        exu(&["verify", path.to_str().unwrap(), "--relation", "xp"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn number_state_is_flagged_not_violated() {
    let path = scratch(
        "n2.json",
        r#"{"family": "fock", "amplitudes": [[0, 0], [0, 0], [1, 0], [0, 0]]}"#,
    );
    let out = exu(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        json(&out)["result"]["reports"][0]["report"]["verdict"],
        "flagged-infinite"
    );
}

#[test]
fn computation_errors_exit_3_with_name() {
    let out = exu(&["mub", "--d", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotPrime"));
}

#[test]
fn mub_sum_rule_for_random_qutrit() {
    let out = exu(&["mub", "--d", "3", "--state", "random", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let sum = json(&out)["result"]["inverse_sum"].as_f64().unwrap();
    assert!((sum - 2.0).abs() < 1e-12, "{sum}");
}

#[test]
fn energy_bound_bouncer_coefficients() {
    let out = exu(&["energy-bound", "--model", "bouncer"]);
    assert_eq!(out.status.code(), Some(0));
    let b = &json(&out)["result"]["bounds"][0];
    assert!((b["coefficient"].as_f64().unwrap() - 1.249).abs() < 1e-3);
    assert!((b["comparison_coefficient"].as_f64().unwrap() - 1.856).abs() < 1e-3);
}

#[test]
fn epr_demo_collapse() {
    let out = exu(&["epr-demo", "--sigma", "0.1", "--tau", "10", "--p0", "2", "--a", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let c = &doc["result"]["collapse_momentum"];
    let formula = (0.01 * 0.5 + 100.0 * 1.5) / 100.01;
    assert!((c["mean_p1"].as_f64().unwrap() - formula).abs() < 1e-5);
    assert!((formula - 1.49985).abs() < 1e-4);
    assert_eq!(doc["result"]["grid"]["axis1"]["n_points"], 1500);
}

#[test]
fn signal_csv_round_trip() {
    let mut text = String::from("t,re,im\n");
    for k in 0..512 {
        let t = -20.0 + k as f64 * (40.0 / 512.0);
        let (amp, phase) = ((-t * t / 4.0).exp(), 1.3 * t + 0.2 * t * t);
        text.push_str(&format!("{t},{},{}\n", amp * phase.cos(), amp * phase.sin()));
    }
    let path = scratch("chirp.csv", &text);
    let out = exu(&["signal", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["result"]["report"]["residual"].as_f64().unwrap() < 1e-6);

    let bad = scratch("bad.csv", "t,re,im\n0,1,0\n0.1,oops,0\n");
    let out = exu(&["signal", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn decompose_and_wigner_artifacts() {
    let path = scratch("boost.json", &gaussian_document(128, 16.0, 0.75));
    let csv = path.with_extension("csv");
    let out = exu(&["decompose", path.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((doc["result"]["classical_mean"].as_f64().unwrap() - 0.75).abs() < 1e-10);
    assert!(doc["result"]["classical_variance"].as_f64().unwrap() < 1e-12);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 129);

    let wcsv = path.with_extension("w.csv");
    let out = exu(&["wigner", path.to_str().unwrap(), "--csv", wcsv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["result"]["total"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(std::fs::read_to_string(&wcsv).unwrap().lines().next(), Some("x,p,w"));
}

#[test]
fn diffusion_and_out_flag() {
    let dir = std::env::temp_dir().join(format!("exu-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("diffusion.json");
    let out = exu(&["diffusion", "--grid-n", "512", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(doc["result"]["rate_error_first"].as_f64().unwrap() < 0.01);
}
