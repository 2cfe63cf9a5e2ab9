//! End-to-end CLI tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_janardan"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (signal?)")
}

#[test]
fn extinction_prints_the_root_at_seven_decimals() {
    let out = run(&["extinction", "--lambda", "2", "--mu", "1.9999"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "0.2031927");

    let out = run(&["extinction", "--poisson", "2", "--precision", "10"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout(&out).trim(), "0.2031878700");
}

#[test]
fn conflicting_or_missing_model_flags_exit_1() {
    let out = run(&["extinction", "--poisson", "2", "--mu", "1"]);
    assert_eq!(exit_code(&out), 1);

    let out = run(&["extinction", "--lambda", "2"]);
    assert_eq!(exit_code(&out), 1);

    let out = run(&["extinction"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--lambda"));

    let out = run(&["extinction", "--lambda", "2", "--mu", "1", "--bogus"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn invalid_parameters_exit_2() {
    let out = run(&["extinction", "--lambda", "2", "--mu", "2.5"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("mu"));

    let out = run(&["extinction", "--poisson", "-1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn degenerate_estimation_input_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.txt");
    fs::write(&path, "0\n".repeat(1000)).unwrap();
    let out = run(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).to_lowercase().contains("degenerate"));
}

#[test]
fn pmf_non_convergence_exits_3() {
    let out = run(&["dist", "--poisson", "2000000"]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr(&out).contains("non-convergence"));
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);
}

#[test]
fn classify_reports_class_and_threshold() {
    let out = run(&["classify", "--lambda", "2", "--mu", "0.2"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("class: subcritical"));
    assert!(text.contains("critical_mu: 0.2384058"));

    let out = run(&["classify", "--lambda", "2", "--mu", "0.3"]);
    assert!(stdout(&out).contains("class: supercritical"));
}

#[test]
fn ext_time_text_and_json_agree() {
    let out = run(&["ext-time", "--poisson", "0.8", "--generations", "20"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("generation"));
    // Pr(T = 20) = 0.000943951... printed at 7 decimals.
    assert!(text.contains("20  0.0009440"));

    let out = run(&[
        "ext-time",
        "--poisson",
        "0.8",
        "--generations",
        "20",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 20);
    let last = &v["rows"][19];
    assert_eq!(last[0], serde_json::json!(20));
    assert!((last[1].as_f64().unwrap() - 0.000943951386221529).abs() < 1e-12);
}

#[test]
fn dist_rows_accumulate_to_one() {
    let out = run(&["dist", "--lambda", "2", "--mu", "1", "--format", "json"]);
    assert_eq!(exit_code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let pmf = v["pmf"].as_array().unwrap();
    let total: f64 = pmf.iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((1.0 - total).abs() < 1e-10);
    assert!((pmf[0].as_f64().unwrap() - (-2.0_f64).exp()).abs() < 1e-15);

    // --max-m truncates and reports the tail.
    let out = run(&["dist", "--lambda", "2", "--mu", "1", "--max-m", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pmf"].as_array().unwrap().len(), 4);
    assert!(v["tail_bound"].as_f64().unwrap() > 1e-3);
}

#[test]
fn sampling_is_seed_deterministic() {
    let a = run(&["sample", "--lambda", "2", "--mu", "1", "-n", "50", "--seed", "7"]);
    let b = run(&["sample", "--lambda", "2", "--mu", "1", "-n", "50", "--seed", "7"]);
    let c = run(&["sample", "--lambda", "2", "--mu", "1", "-n", "50", "--seed", "8"]);
    assert_eq!(exit_code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert!(stdout(&a)
        .lines()
        .all(|l| l.parse::<u32>().is_ok()));
}

#[test]
fn sample_estimate_round_trip_recovers_the_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.txt");
    let out = run(&[
        "sample", "--lambda", "2", "--mu", "1", "-n", "2000", "--seed", "7", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);

    let out = run(&["estimate", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["lambda_hat"].as_f64().unwrap() - 2.0).abs() < 0.35);
    assert!((v["mu_hat"].as_f64().unwrap() - 1.0).abs() < 0.4);
    assert_eq!(v["n"], serde_json::json!(2000));
}

#[test]
fn estimate_reads_frequency_csv_with_the_explicit_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("freq.csv");
    fs::write(&path, "class,count\n0,400\n1,400\n2,200\n").unwrap();
    let out = run(&["estimate", "--input", path.to_str().unwrap(), "--from-freq"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("n: 1000"));
    assert!(text.contains("admissible: true"));

    // Without the flag the same file is rejected as observations.
    let out = run(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn simulate_summarizes_extinction() {
    let out = run(&[
        "simulate", "--lambda", "0.8", "--mu", "0.4", "--traces", "400", "--max-gen", "60",
        "--seed", "5",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("traces: 400"));
    let fraction: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("extinct_fraction: "))
        .unwrap()
        .parse()
        .unwrap();
    // Subcritical: nearly every trace dies out within 60 generations.
    assert!(fraction > 0.99);

    let rerun = run(&[
        "simulate", "--lambda", "0.8", "--mu", "0.4", "--traces", "400", "--max-gen", "60",
        "--seed", "5",
    ]);
    assert_eq!(stdout(&out), stdout(&rerun));
}

fn assert_identical_trees(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let left = fs::read(a.join(name)).unwrap_or_else(|_| panic!("missing {name} in {a:?}"));
        let right = fs::read(b.join(name)).unwrap_or_else(|_| panic!("missing {name} in {b:?}"));
        assert_eq!(left, right, "{name} differs between runs");
    }
}

#[test]
fn tables_all_is_deterministic_and_complete() {
    let expected = [
        "T1.csv", "T2.csv", "T3.csv", "T4.csv", "T5.csv", "figure1.csv", "figure1.svg",
    ];
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(&["tables", "--all", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    }
    assert_identical_trees(dir_a.path(), dir_b.path(), &expected);

    // The CSV is full-precision: T2 carries 17 significant digits.
    let t2 = fs::read_to_string(dir_a.path().join("T2.csv")).unwrap();
    assert!(t2.starts_with("generation,"));
    assert!(t2.contains("e-1"), "expected scientific cells in {t2}");
}

#[test]
fn tables_respects_the_output_directory_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_janardan"))
        .args(["tables", "--id", "T3", "--format", "json"])
        .env("JANARDAN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("T3.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["id"], serde_json::json!("T3"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn tables_without_a_selection_is_a_usage_error() {
    let out = run(&["tables"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--all"));
}

#[test]
fn table5_depends_on_the_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out = run(&["tables", "--id", "T5", "--out", dir_a.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let out = run(&[
        "tables", "--id", "T5", "--seed", "99", "--out", dir_b.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let a = fs::read_to_string(dir_a.path().join("T5.txt")).unwrap();
    let b = fs::read_to_string(dir_b.path().join("T5.txt")).unwrap();
    assert_ne!(a, b);
    assert!(a.contains("regenerated"));
}
