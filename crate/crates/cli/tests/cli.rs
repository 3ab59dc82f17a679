//! End-to-end runs of the compiled binary: exit codes, report shape, and
//! the determinism contract.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctoda"))
}

fn fixture(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("ctoda-cli-{}-{name}", std::process::id()))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_report(path: &PathBuf) -> Value {
    let text = std::fs::read_to_string(path).expect("report exists");
    serde_json::from_str(&text).expect("report parses")
}

#[test]
fn verify_worked_measure_exact_zeros() {
    let report = scratch("verify.json");
    let out = run(&[
        "verify",
        "--measure",
        &fixture("two_node.json"),
        "--n-max",
        "1",
        "--checks",
        "all",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rep = read_report(&report);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["passed"], true);
    let suites = rep["suites"].as_array().unwrap();
    assert!(!suites.is_empty());
    for suite in suites {
        let status = suite["status"].as_str().unwrap();
        assert_ne!(status, "fail", "suite {} failed", suite["name"]);
        if status == "pass" {
            for item in suite["items"].as_array().unwrap_or(&Vec::new()) {
                assert_eq!(item["exact"], true);
                assert_eq!(item["residual"], 0.0, "item {}", item["label"]);
            }
        }
    }
    for id in rep["identities"].as_array().unwrap() {
        assert_eq!(id["failures"], 0);
    }
    std::fs::remove_file(&report).ok();
}

#[test]
fn missing_measure_is_usage_error() {
    let out = run(&["verify", "--measure", "/nonexistent/mu.json", "--n-max", "1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn overdeep_family_is_check_failure() {
    let out = run(&[
        "verify",
        "--measure",
        &fixture("two_node.json"),
        "--n-max",
        "3",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn exact_backend_rejects_quadrature() {
    let out = run(&["recurrence", "--quad", "laguerre:0.5", "--n-max", "2"]);
    assert_eq!(exit_code(&out), 2);
    let out = run(&[
        "recurrence",
        "--quad",
        "laguerre:0.5",
        "--n-max",
        "2",
        "--backend",
        "f64",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn identities_deterministic_modulo_timing() {
    let r1 = scratch("id1.json");
    let r2 = scratch("id2.json");
    for r in [&r1, &r2] {
        let out = run(&[
            "identities",
            "--trials",
            "25",
            "--p",
            "1",
            "--seed",
            "7",
            "--report",
            r.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
    }
    let mut a = read_report(&r1);
    let mut b = read_report(&r2);
    a.as_object_mut().unwrap().remove("timing_ms");
    b.as_object_mut().unwrap().remove("timing_ms");
    assert_eq!(a, b);
    std::fs::remove_file(&r1).ok();
    std::fs::remove_file(&r2).ok();
}

#[test]
fn lattice_six_node_with_series_export() {
    let report = scratch("lattice.json");
    let csv = scratch("series.csv");
    let out = run(&[
        "lattice",
        "--measure",
        &fixture("six_node.json"),
        "--n-max",
        "4",
        "--report",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rep = read_report(&report);
    assert_eq!(rep["passed"], true);
    let lax = rep["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "lax compatibility")
        .expect("lax suite present");
    assert_eq!(lax["status"], "pass");

    let series = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = series.trim().lines().collect();
    assert_eq!(lines[0], "n,h_00,a_00,tau,sigma");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,3354221/166320,"));
    assert!(lines[1].ends_with(",1,35/6"));
    std::fs::remove_file(&report).ok();
    std::fs::remove_file(&csv).ok();
}

#[test]
fn polys_emits_family_tables() {
    let out = run(&[
        "polys",
        "--measure",
        &fixture("two_node.json"),
        "--n-max",
        "1",
    ]);
    assert_eq!(exit_code(&out), 0);
    let rep: Value = serde_json::from_slice(&out.stdout).expect("stdout is the report");
    assert_eq!(rep["schema"], 1);
    let data = &rep["data"];
    assert_eq!(data["complete"], true);
    assert_eq!(data["xi"][1][0][0][0], "-24/17");
    assert_eq!(data["h"][0][0][0], "17/12");
    assert_eq!(data["h"][1][0][0], "1/102");
    assert_eq!(data["v"][1][0][0], "3/17");
}
