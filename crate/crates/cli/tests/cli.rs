use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = softinfo_cli::run(std::iter::once("softinfo").chain(args.iter().copied()), &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/output.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

#[test]
fn bad_distance_is_a_usage_error() {
    let (code, out, err) = run(&["posteriors", "-d", "4", "-p", "0.01", "--shots", "10", "--seed", "1"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.starts_with("error:"));
}

#[test]
fn enumeration_over_capacity_exits_3() {
    let (code, _, _) = run(&["bias", "-d", "7", "-p", "0.01", "--shots", "10", "--seed", "1", "--oracle", "enumerate"]);
    assert_eq!(code, 3);
}

#[test]
fn parse_failures_exit_2_and_help_exits_0() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["posteriors"]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("abort-savings"));
}

#[test]
fn out_of_range_probability_exits_2() {
    assert_eq!(run(&["zne", "-p", "1.5", "--shots-per-scale", "10", "--seed", "1"]).0, 2);
    assert_eq!(run(&["ls-channel", "--pm", "0.1,0.2"]).0, 2);
}

#[test]
fn seeded_output_is_stable_across_thread_counts() {
    let args = ["postselect", "-d", "3", "-p", "0.03", "--shots", "5000", "--seed", "3"];
    let a = run(&[&args[..], &["--threads", "1"]].concat());
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let c = run(&["postselect", "-d", "3", "-p", "0.03", "--shots", "5000", "--seed", "4"]);
    assert_ne!(a.1, c.1);
}

#[test]
fn json_artifacts_match_schema() {
    let v = schema();
    let cases: &[&[&str]] = &[
        &["posteriors", "-d", "3", "-p", "0.05", "--shots", "50", "--seed", "1"],
        &["bias", "-d", "3", "-p", "0.02", "--shots", "200", "--seed", "1"],
        &["pec", "-p", "0.01", "--qubits", "2", "--gates", "5", "--shots", "1000", "--seed", "1"],
        &["zne", "-p", "0.01", "--qubits", "2", "--gates", "5", "--shots-per-scale", "1000", "--seed", "1"],
        &["tcnot", "-d", "3", "-p", "0.02", "--shots", "200", "--seed", "1"],
        &["ls-channel", "--pm", "0.01,0.02,0.03"],
        &["resources"],
        &["abort-savings", "--trials", "0", "--seed", "1"],
    ];
    for args in cases {
        let (code, out, err) = run(&[*args, &["--format", "json"][..]].concat());
        assert_eq!(code, 0, "{args:?}: {err}");
        let doc: Value = serde_json::from_slice(&out).unwrap();
        assert!(v.is_valid(&doc), "{args:?}");
        assert_eq!(doc["command"], args[0]);
        assert!(!doc["rows"].as_array().unwrap().is_empty());
    }
}

#[test]
fn csv_header_matches_row_fields() {
    let (_, out, _) = run(&["ls-channel", "--pm", "0.01,0.01,0.01"]);
    let mut r = csv::Reader::from_reader(&out[..]);
    let n = r.headers().unwrap().len();
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|x| x.len() == n));
}

#[test]
fn out_flag_writes_file_and_leaves_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.csv");
    let (code, out, _) = run(&["resources", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let (_, direct, _) = run(&["resources"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct);
}

#[test]
fn binary_reads_thread_count_from_env() {
    let bin = env!("CARGO_BIN_EXE_softinfo");
    let args = ["bias", "-d", "3", "-p", "0.02", "--shots", "300", "--seed", "5"];
    let env1 = Command::new(bin).args(args).env("SOFTINFO_THREADS", "1").output().unwrap();
    let env4 = Command::new(bin).args(args).env("SOFTINFO_THREADS", "4").output().unwrap();
    assert!(env1.status.success());
    assert_eq!(env1.stdout, env4.stdout);
    let bad = Command::new(bin).args(args).env("SOFTINFO_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
