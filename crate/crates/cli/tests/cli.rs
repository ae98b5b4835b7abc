use std::process::{Command, Output};

use serde_json::Value;

fn mkc_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkc-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ks_check_reports_the_obstruction() {
    let o = mkc_lab(&["ks-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("obstruction=true"));
}

#[test]
fn classical_bound_is_four() {
    let o = mkc_lab(&["classical-bound"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bound=4"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["frobnicate"][..],
        &[],
        &["chsh-toy", "--shots", "lots"],
        &["mixture", "--overlap", "0"],
        &["pom-audit", "--protocol", "telepathy"],
        &["ks-check", "--format", "yaml"],
    ] {
        let o = mkc_lab(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_is_not_an_error() {
    let o = mkc_lab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cabello-single"));
}

#[test]
fn csv_has_the_fixed_header() {
    let o = mkc_lab(&["pom-box", "--shots", "2000", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variable,mean,se,target,tolerance,pass"));
    assert!(lines.next().unwrap().starts_with("success_rate,1,0,1,0,true"));
}

#[test]
fn json_reports_parse() {
    let o = mkc_lab(&["cabello-single", "--shots", "600", "--state", "bell", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["experiment"], "cabello-single");
    assert_eq!(v["config"]["options"]["state"], "bell");
    assert!(v["config"].get("parallel").is_none());
    let sum = v["variables"].as_array().unwrap().iter().find(|x| x["name"] == "cabello_sum").unwrap();
    assert_eq!(sum["mean"], 6.0);
}

#[test]
fn output_does_not_depend_on_pool_size() {
    for exp in [
        &["chsh-toy", "--shots", "5000"][..],
        &["mixture", "--shots", "5000"],
        &["pom-quantum", "--shots", "5000", "--via-mkc"],
        &["cabello-sequential", "--shots", "3000", "--state", "zero-plus"],
    ] {
        let outputs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .map(|p| {
                let mut args = exp.to_vec();
                args.extend(["--parallel", p, "--seed", "3", "--format", "json"]);
                mkc_lab(&args).stdout
            })
            .collect();
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{exp:?}");
    }
}

#[test]
fn sequential_without_collapse_is_diagnostic_only() {
    let o = mkc_lab(&["cabello-sequential", "--shots", "4000", "--no-collapse", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rate = v["variables"].as_array().unwrap().iter().find(|x| x["name"] == "a11_agreement_rate").unwrap();
    assert!(rate["mean"].as_f64().unwrap() < 0.9);
    assert!(rate["target"].is_null());
}

#[test]
fn partial_order_omits_the_sum() {
    let o = mkc_lab(&["cabello-sequential", "--shots", "500", "--order", "R1,C1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains("cabello_sum"));
    assert!(!text.contains("E(C3)"));
    assert!(text.contains("a11_agreement_rate,1,"));
}

#[test]
fn every_experiment_passes_at_moderate_shots() {
    for args in [
        &["pom-quantum"][..],
        &["pom-classical"],
        &["pom-classical", "--boxed"],
        &["pom-audit", "--protocol", "classical-table"],
        &["pom-audit", "--protocol", "direct-box"],
        &["mixture", "--overlap", "0.3"],
    ] {
        let mut a = args.to_vec();
        a.extend(["--shots", "20000", "--seed", "5"]);
        let o = mkc_lab(&a);
        assert_eq!(o.status.code(), Some(0), "{args:?}\n{}", stdout(&o));
        assert!(stdout(&o).ends_with("result: pass\n"));
    }
}
