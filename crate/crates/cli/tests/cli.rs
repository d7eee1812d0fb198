use std::process::{Command, Output};

use serde_json::Value;

fn liouville(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .env_remove("NT_THREADS")
        .output()
        .expect("binary runs")
}

fn outcome(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON outcome")
}

#[test]
fn sieve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seg.csv");
    let out = liouville(&[
        "sieve",
        "--lo",
        "1",
        "--hi",
        "10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(outcome(&out)["payload"]["rows"], 10);
    let csv = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,lambda,mu");
    assert_eq!(rows.len(), 11);
    let lambda: Vec<i8> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let mu: Vec<i8> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lambda, [1, -1, -1, 1, -1, 1, -1, -1, 1, 1]);
    assert_eq!(mu, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
}

#[test]
fn sieve_rejects_inverted_range() {
    let out = liouville(&["sieve", "--lo", "10", "--hi", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn scan_report_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let events = dir.path().join("e.csv");
    let out = liouville(&[
        "scan",
        "--to",
        "1500",
        "--report",
        report.to_str().unwrap(),
        "--events-csv",
        events.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["n_max"], 1500);
    assert_eq!(r["first_positive_n"], Value::Null);
    assert!(r["max_L_on_range"].as_i64().unwrap() <= 0);
    assert_eq!(r["nonneg_events"][0], serde_json::json!([2, 0]));
    let csv = std::fs::read_to_string(&events).unwrap();
    assert!(csv.starts_with("n,L\n2,0\n"));
    assert_eq!(
        csv.lines().count() - 1,
        r["nonneg_events"].as_array().unwrap().len()
    );
}

#[test]
fn scan_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("scan.ckpt");
    let ck = ckpt.to_str().unwrap();
    let first = liouville(&["scan", "--to", "50000", "--checkpoint", ck]);
    assert_eq!(first.status.code(), Some(0));
    let resumed = liouville(&[
        "scan",
        "--to",
        "120000",
        "--checkpoint",
        ck,
        "--threads",
        "2",
    ]);
    assert_eq!(resumed.status.code(), Some(0));
    let fresh = liouville(&["scan", "--to", "120000"]);
    let (a, b) = (outcome(&resumed), outcome(&fresh));
    assert_eq!(a["payload"]["resumed_from"], 50001);
    for key in [
        "final_L",
        "final_M",
        "min_L",
        "max_L_on_range",
        "nonneg_event_count",
        "first_positive_n",
    ] {
        assert_eq!(a["payload"][key], b["payload"][key], "{key}");
    }
}

#[test]
fn corrupt_checkpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("scan.ckpt");
    std::fs::write(&ckpt, "{\"next_n\": 2\n").unwrap();
    let out = liouville(&[
        "scan",
        "--to",
        "100",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(outcome(&out)["payload"]["kind"], "checkpoint_corrupt");
}

#[test]
fn density_small() {
    let out = liouville(&["density", "--to", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = outcome(&out)["payload"]["value"]
        .as_str()
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.80..=0.90).contains(&v));
}

#[test]
fn eval_values_are_strings() {
    let out = liouville(&["eval", "--series", "splus", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let o = outcome(&out);
    let value = o["payload"]["value"].as_str().unwrap();
    assert!(value.starts_with("0.12331293"));
    assert!(o["payload"]["error_bound"].is_string());
    let out = liouville(&[
        "eval",
        "--series",
        "lambert-plus",
        "--x",
        "0.3",
        "--prec",
        "256",
    ]);
    let o = outcome(&out);
    let v: f64 = o["payload"]["value"].as_str().unwrap().parse().unwrap();
    assert!((v - 0.12).abs() < 1e-15);
    assert_eq!(o["params"]["series"], "lambert-plus");
}

#[test]
fn eval_domain_errors() {
    for args in [
        ["eval", "--series", "splus", "--x", "0"],
        ["eval", "--series", "lambert", "--x", "1"],
        ["eval", "--series", "phi", "--x", "abc"],
    ] {
        let out = liouville(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(outcome(&out)["status"], "error");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(liouville(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(liouville(&["scan", "--to", "ten"]).status.code(), Some(2));
    assert_eq!(
        liouville(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(liouville(&["zeta", "--s", "1"]).status.code(), Some(2));
}

#[test]
fn crossing_brackets_root() {
    let out = liouville(&["crossing", "--lo", "0.1", "--hi", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let p = &outcome(&out)["payload"];
    let lo: f64 = p["lo"].as_str().unwrap().parse().unwrap();
    let hi: f64 = p["hi"].as_str().unwrap().parse().unwrap();
    assert!(hi - lo <= 2f64.powi(-40));
    assert!(lo <= 0.171_823_860_972_094_2 && 0.171_823_860_972_094_2 <= hi);
    let out = liouville(&["crossing", "--lo", "0.3", "--hi", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_passes() {
    let out = liouville(&["verify", "--suite", "all", "--prec", "128", "--json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let o = outcome(&out);
    assert_eq!(o["status"], "pass");
    assert_eq!(o["payload"]["passed"], o["payload"]["total"]);
}

#[test]
fn verify_corollary_at_256_bits() {
    let out = liouville(&["verify", "--suite", "corollary", "--prec", "256", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let o = outcome(&out);
    let check = &o["payload"]["checks"][0];
    assert_eq!(check["pass"], true);
    let bound: f64 = check["error_bound"].as_str().unwrap().parse().unwrap();
    assert!(bound <= 2f64.powi(-180));
}

#[test]
fn verify_fails_with_exit_one_when_a_bound_is_violated() {
    let out = liouville(&[
        "verify",
        "--suite",
        "step1",
        "--tolerance",
        "1e-300",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let o = outcome(&out);
    assert_eq!(o["status"], "fail");
    assert_eq!(o["payload"]["passed"], 0);
    assert_eq!(
        liouville(&["verify", "--tolerance", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_text_table() {
    let out = liouville(&["verify", "--suite", "theta-fe"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert!(text.contains("3/3 checks passed"));
}

#[test]
fn json_round_trip_is_idempotent() {
    let out = liouville(&["zeta", "--s", "2", "--prec", "128"]);
    let o = outcome(&out);
    let again: Value = serde_json::from_str(&serde_json::to_string(&o).unwrap()).unwrap();
    assert_eq!(o, again);
    let value = o["payload"]["value"].as_str().unwrap();
    assert!(value.starts_with("1.6449340668482264364724151666460251892"));
}

#[test]
fn threads_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["scan", "--to", "10000"])
        .env("NT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(outcome(&out)["params"]["threads"], "2");
}
