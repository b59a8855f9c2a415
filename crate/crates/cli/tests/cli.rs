//! End-to-end tests of the tpt binary: exit codes, output files, config
//! overrides, and the report aggregation.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tpt_core::distributions::gauss_hermite_product;
use tpt_core::{MultiIndex, Polynomial};

fn tpt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn tpt")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("tpt exited without a code")
}

fn stdout_lines(output: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&output.stdout)
        .lines()
        .map(|line| serde_json::from_str(line).expect("stdout line is JSON"))
        .collect()
}

fn stderr_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr not JSON: {text}"))
}

const ZEROS_CSV: &str = "x1\n0\n0\n0\n0\n0\n0\n0\n0\n";

#[test]
fn params_reports_theory_scale_values() {
    let dir = tempfile::tempdir().unwrap();
    let output = tpt(dir.path(), &["params", "--d", "1", "--epsilon", "0.5"]);
    assert_eq!(code(&output), 0);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["k"].as_u64(), Some(268435456));
    assert!(payload["m"].is_null(), "m overflows at theory scale");
    assert_eq!(payload["eta_underflow"].as_bool(), Some(true));
    assert!(payload["log10_m"].as_f64().unwrap() > 1e9);
    // No --out: a pure query leaves the directory empty.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn test_accepts_gaussian_and_rejects_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let output = tpt(
        dir.path(),
        &["test", "--gen", "gaussian", "--n", "1", "--m", "4000", "--k", "2", "--eta", "0.3",
          "--seed", "5"],
    );
    assert_eq!(code(&output), 0);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["accepted"].as_bool(), Some(true));
    assert_eq!(payload["m"].as_u64(), Some(4000));
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("test-5.json")).unwrap()).unwrap();
    assert_eq!(record["command"].as_str(), Some("test"));
    assert_eq!(record["seed"].as_u64(), Some(5));
    assert_eq!(record["payload"], *payload);

    fs::write(dir.path().join("zeros.csv"), ZEROS_CSV).unwrap();
    let output = tpt(
        dir.path(),
        &["test", "--samples", "zeros.csv", "--k", "2", "--eta", "0.5"],
    );
    assert_eq!(code(&output), 1, "rejection maps to exit 1");
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["accepted"].as_bool(), Some(false));
    assert_eq!(payload["worst_alpha"], serde_json::json!([2]));
    assert_eq!(payload["worst_dev"].as_f64(), Some(1.0));
    // The record names the input and its hash.
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("test-0.json")).unwrap()).unwrap();
    assert_eq!(
        record["inputs"]["zeros.csv"].as_str().map(str::len),
        Some(64)
    );
}

#[test]
fn seed_sweep_emits_one_record_per_seed_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let output = tpt(
        dir.path(),
        &["test", "--gen", "gaussian", "--n", "1", "--m", "500", "--k", "2", "--eta", "0.9",
          "--seeds", "0..4", "--workers", "3"],
    );
    assert_eq!(code(&output), 0);
    let lines = stdout_lines(&output);
    assert_eq!(lines.len(), 5);
    for seed in 0..5 {
        assert!(dir.path().join(format!("test-{seed}.json")).exists());
    }
    // Same sweep single-threaded: identical record payloads.
    let rerun_dir = tempfile::tempdir().unwrap();
    let rerun = tpt(
        rerun_dir.path(),
        &["test", "--gen", "gaussian", "--n", "1", "--m", "500", "--k", "2", "--eta", "0.9",
          "--seeds", "0..4", "--workers", "1"],
    );
    assert_eq!(stdout_lines(&rerun), lines);
}

#[test]
fn learn_fits_labeled_csv_and_respects_eta() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "x1,label\n-2,-1\n-1,-1\n1,1\n2,1\n";
    fs::write(dir.path().join("data.csv"), csv).unwrap();

    let output = tpt(
        dir.path(),
        &["learn", "--data", "data.csv", "--d", "1", "--k", "2", "--eta", "2.0",
          "--epsilon", "0.5"],
    );
    assert_eq!(code(&output), 0);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["status"].as_str(), Some("Accepted"));
    assert!(payload["train_loss"].as_f64().unwrap() <= 0.25);
    assert!(
        payload["classifier"]["h"]["terms"].is_array(),
        "serialized hypothesis rides along"
    );

    // Tight eta: the 4-point moment deviation (E x^2 = 2.5) trips the tester.
    let output = tpt(
        dir.path(),
        &["learn", "--data", "data.csv", "--d", "1", "--k", "2", "--eta", "0.5",
          "--epsilon", "0.5"],
    );
    assert_eq!(code(&output), 1);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["status"].as_str(), Some("Rejected"));
    assert!(payload["classifier"].is_null());
}

#[test]
fn fool_measures_quadrature_against_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let dist = gauss_hermite_product(1, 4).unwrap();
    fs::write(
        dir.path().join("dist.json"),
        serde_json::to_string(&dist).unwrap(),
    )
    .unwrap();
    let halfspace = Polynomial::variable(1, 0);
    fs::write(
        dir.path().join("halfspace.json"),
        serde_json::to_string(&halfspace).unwrap(),
    )
    .unwrap();

    let output = tpt(
        dir.path(),
        &["fool", "--dist", "dist.json", "--ptf", "halfspace.json", "--mc", "4000",
          "--seed", "3"],
    );
    assert_eq!(code(&output), 0);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["ptf_id"].as_str(), Some("halfspace"));
    assert_eq!(payload["k"].as_u64(), Some(1));
    // Symmetric rule: discrete side is exactly 0, so gap = |MC estimate|.
    assert_eq!(payload["discrete_expectation"].as_f64(), Some(0.0));
    let gap = payload["gap"].as_f64().unwrap();
    let half_width = payload["estimator_error"].as_f64().unwrap();
    assert!(gap <= 3.0 * half_width, "gap {gap} vs half-width {half_width}");
    assert!(payload["slack"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn lift_writes_lifted_csv_next_to_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "x1,x2,label\n0.5,-1,1\n2,0.25,-1\n-3,1,1\n";
    fs::write(dir.path().join("data.csv"), csv).unwrap();
    let p = Polynomial::from_terms(2, [(MultiIndex::new(vec![1, 1]), 1.0)]).unwrap();
    fs::write(dir.path().join("p.json"), serde_json::to_string(&p).unwrap()).unwrap();

    let output = tpt(
        dir.path(),
        &["lift", "--data", "data.csv", "--N", "3", "--p", "p.json", "--seed", "9"],
    );
    assert_eq!(code(&output), 0);
    let payload = &stdout_lines(&output)[0];
    assert_eq!(payload["block_size"].as_u64(), Some(3));
    assert_eq!(payload["rows"].as_u64(), Some(3));
    assert_eq!(payload["input_dimension"].as_u64(), Some(2));
    assert_eq!(payload["lifted_dimension"].as_u64(), Some(6));
    assert_eq!(payload["lifted_csv"].as_str(), Some("lift-9.csv"));

    let lifted = fs::read(dir.path().join("lift-9.csv")).unwrap();
    let digest: String = {
        use sha2::{Digest, Sha256};
        Sha256::digest(&lifted).iter().map(|b| format!("{b:02x}")).collect()
    };
    assert_eq!(payload["lifted_sha256"].as_str(), Some(digest.as_str()));
    let text = String::from_utf8(lifted).unwrap();
    assert!(text.starts_with("x1,x2,x3,x4,x5,x6,label\n"));
    assert_eq!(text.lines().count(), 4);
    // Labels ride through untouched.
    let last_fields: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last_fields[6], "1");
    // The companion polynomial lives on the lifted coordinates.
    assert_eq!(payload["p_delta"]["n"].as_u64(), Some(6));
}

#[test]
fn signapprox_emits_the_suite_table() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "signapprox", "--degrees", "1..2", "--nodes", "128", "--range", "8",
        "--out", "sub/table.csv",
    ];
    let output = tpt(dir.path(), &args);
    assert_eq!(code(&output), 0);
    let table = fs::read_to_string(dir.path().join("sub/table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("p_id,degree,error,grid_residual,grid_nodes,range")
    );
    assert_eq!(lines.count(), 8, "4 polynomials x 2 degrees");
    assert!(dir.path().join("sub/signapprox-0.json").exists());

    // Deterministic: a rerun reproduces the table byte for byte.
    let rerun = tpt(dir.path(), &args);
    assert_eq!(code(&rerun), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("sub/table.csv")).unwrap(),
        table
    );
}

#[test]
fn config_json_overrides_flags_and_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("zeros.csv"), ZEROS_CSV).unwrap();
    fs::write(dir.path().join("loose.json"), r#"{"eta": 10.0}"#).unwrap();

    // The flag alone would reject; the config's eta wins and accepts.
    let output = tpt(
        dir.path(),
        &["test", "--samples", "zeros.csv", "--k", "2", "--eta", "1e-12",
          "--config", "loose.json"],
    );
    assert_eq!(code(&output), 0);
    assert_eq!(stdout_lines(&output)[0]["accepted"].as_bool(), Some(true));

    fs::write(dir.path().join("typo.json"), r#"{"etaa": 0.5}"#).unwrap();
    let output = tpt(
        dir.path(),
        &["test", "--samples", "zeros.csv", "--k", "2", "--eta", "0.5",
          "--config", "typo.json"],
    );
    assert_eq!(code(&output), 2);
    assert_eq!(stderr_json(&output)["kind"].as_str(), Some("json"));
}

#[test]
fn errors_exit_2_with_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let output = tpt(dir.path(), &["frobnicate"]);
    assert_eq!(code(&output), 2);
    assert_eq!(stderr_json(&output)["kind"].as_str(), Some("usage"));

    let output = tpt(dir.path(), &["test", "--samples", "missing.csv", "--k", "2", "--eta", "0.1"]);
    assert_eq!(code(&output), 2);
    let err = stderr_json(&output);
    assert_eq!(err["kind"].as_str(), Some("io"));
    assert!(err["error"].as_str().unwrap().contains("missing.csv"));

    let output = tpt(dir.path(), &["test", "--gen", "gaussian", "--n", "1", "--m", "100"]);
    assert_eq!(code(&output), 2, "missing k/eta");
    assert_eq!(
        stderr_json(&output)["kind"].as_str(),
        Some("invalid-parameter")
    );
}

#[test]
fn verify_repro_passes_for_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let output = tpt(
        dir.path(),
        &["test", "--gen", "gaussian", "--n", "2", "--m", "1000", "--k", "3", "--eta", "0.5",
          "--seeds", "0..2", "--verify-repro"],
    );
    assert_eq!(code(&output), 0);
    assert_eq!(stdout_lines(&output).len(), 3);
}

#[test]
fn report_flattens_records_and_skips_junk() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    fs::create_dir(&runs).unwrap();
    let runs_str = runs.to_str().unwrap();

    let sweep = tpt(
        dir.path(),
        &["test", "--gen", "gaussian", "--n", "1", "--m", "500", "--k", "2", "--eta", "0.9",
          "--seeds", "0..4", "--out", runs_str],
    );
    assert_eq!(code(&sweep), 0);
    let params = tpt(
        dir.path(),
        &["params", "--d", "1", "--epsilon", "0.5", "--out", runs_str],
    );
    assert_eq!(code(&params), 0);
    fs::write(runs.join("junk.json"), "{ not json").unwrap();
    fs::write(runs.join("notes.csv"), "ignored,by,report\n").unwrap();

    let reports = dir.path().join("reports");
    let output = tpt(
        dir.path(),
        &["report", "--dir", runs_str, "--out-dir", reports.to_str().unwrap()],
    );
    assert_eq!(code(&output), 0);
    let summary = &stdout_lines(&output)[0];
    assert_eq!(summary["records"].as_u64(), Some(6));
    assert_eq!(summary["skipped"].as_u64(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("junk.json"));

    let test_table = fs::read_to_string(reports.join("report-test.csv")).unwrap();
    let lines: Vec<&str> = test_table.lines().collect();
    assert_eq!(lines[0], "seed,accepted,worst_alpha,worst_dev,k,eta,m");
    assert_eq!(lines.len(), 7, "5 seeds + summary");
    let summary_line = lines.last().unwrap();
    assert!(summary_line.starts_with("summary,"), "{summary_line}");

    let params_table = fs::read_to_string(reports.join("report-params.csv")).unwrap();
    assert_eq!(params_table.lines().count(), 2);
    // Commands with no records still get a header-only table.
    let learn_table = fs::read_to_string(reports.join("report-learn.csv")).unwrap();
    assert_eq!(learn_table.lines().count(), 1);

    // Idempotent: a second pass reproduces the tables byte for byte.
    let rerun = tpt(
        dir.path(),
        &["report", "--dir", runs_str, "--out-dir", reports.to_str().unwrap()],
    );
    assert_eq!(code(&rerun), 0);
    assert_eq!(
        fs::read_to_string(reports.join("report-test.csv")).unwrap(),
        test_table
    );
}
