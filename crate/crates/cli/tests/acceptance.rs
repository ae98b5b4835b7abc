//! Runs the acceptance suite through the binary and prints one line per
//! criterion. Lines go straight to the stdout handle so they show up even
//! when the test harness captures output.

use std::io::Write;
use std::process::Command;

use serde_json::Value;

fn run_suite() -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_mkc-lab"))
        .args(["acceptance", "--seed", "7", "--format", "json"])
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

#[test]
fn acceptance_criteria() {
    let (first, code) = run_suite();
    let (second, _) = run_suite();
    let report: Value = serde_json::from_slice(&first).expect("json report");

    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut failures = Vec::new();
    for fact in report["facts"].as_array().expect("facts") {
        let name = fact["name"].as_str().unwrap();
        let value = fact["value"].as_str().unwrap();
        let Some(id) = name.strip_prefix("criterion_") else { continue };
        let (status, title) = value.split_once(' ').unwrap();
        let mut pass = status == "pass";
        // Criterion 13 also covers two separate processes.
        if id == "13" {
            pass &= first == second;
        }
        writeln!(out, "criterion {id:>2} {title:<36} {}", if pass { "PASS" } else { "FAIL" }).unwrap();
        if !pass {
            failures.push(id.to_owned());
        }
    }
    for v in report["variables"].as_array().unwrap() {
        if v["pass"] == Value::Bool(false) {
            writeln!(
                out,
                "  failed {}: mean {} target {} tolerance {}",
                v["name"], v["mean"], v["target"], v["tolerance"]
            )
            .unwrap();
        }
    }
    assert_eq!(report["facts"].as_array().unwrap().len(), 13);
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
    assert_eq!(code, Some(0));
    assert_eq!(report["pass"], Value::Bool(true));
}
