//! Run reports and their JSON, CSV and text renderings.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigEcho, Format};

/// Rounds to 6 significant digits. Non-finite values pass through.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite()).map(round6)
}

/// One reported quantity and, when it has one, its acceptance target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub mean: f64,
    pub se: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    /// `|mean - target| <= tolerance`, or absent without a target.
    pub pass: Option<bool>,
}

impl Variable {
    /// A value without a target.
    pub fn observed(name: impl Into<String>, mean: f64, se: Option<f64>) -> Self {
        Self { name: name.into(), mean: round6(mean), se: round_opt(se), target: None, tolerance: None, pass: None }
    }

    /// A value checked against `target` within `tolerance`. The check uses the
    /// unrounded numbers.
    pub fn checked(name: impl Into<String>, mean: f64, se: Option<f64>, target: f64, tolerance: f64) -> Self {
        let pass = (mean - target).abs() <= tolerance;
        Self {
            name: name.into(),
            mean: round6(mean),
            se: round_opt(se),
            target: Some(round6(target)),
            tolerance: Some(round6(tolerance)),
            pass: Some(pass),
        }
    }

    /// A value checked against `target` within `max(sigmas * se, floor)`.
    pub fn within_sigmas(name: impl Into<String>, mean: f64, se: f64, target: f64, sigmas: f64, floor: f64) -> Self {
        let se = if se.is_finite() { se } else { 0.0 };
        Self::checked(name, mean, Some(se), target, (sigmas * se).max(floor))
    }

    /// An exact yes/no check, reported as 1 or 0 against target 1.
    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        Self::checked(name, if holds { 1.0 } else { 0.0 }, None, 1.0, 0.0)
    }
}

/// A named non-numeric result such as `obstruction=true`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub facts: Vec<Fact>,
    pub variables: Vec<Variable>,
    pub catalog_size: Option<usize>,
    pub pass: bool,
    /// Wall-clock time. Kept out of the rendered report so that output is
    /// reproducible; the binary prints it on stderr.
    #[serde(skip)]
    pub duration: Option<Duration>,
}

impl RunReport {
    pub fn new(config: ConfigEcho) -> Self {
        Self { config, facts: Vec::new(), variables: Vec::new(), catalog_size: None, pass: true, duration: None }
    }

    pub fn fact(&mut self, name: impl Into<String>, value: impl ToString) {
        self.facts.push(Fact { name: name.into(), value: value.to_string() });
    }

    pub fn push(&mut self, v: Variable) {
        if v.pass == Some(false) {
            self.pass = false;
        }
        self.variables.push(v);
    }
}

fn number(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-4..1e9).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, number)
}

fn pass_cell(p: Option<bool>) -> String {
    p.map_or_else(String::new, |b| b.to_string())
}

pub fn emit_report(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => emit_csv(report),
        Format::Text => emit_text(report),
    }
}

fn emit_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "mean", "se", "target", "tolerance", "pass"]).expect("in-memory write");
    for v in &report.variables {
        w.write_record([
            v.name.clone(),
            number(v.mean),
            cell(v.se),
            cell(v.target),
            cell(v.tolerance),
            pass_cell(v.pass),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn emit_text(report: &RunReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    let _ = writeln!(out, "experiment: {}", c.experiment);
    let _ = write!(out, "shots: {}  seed: {}  epsilon: {}", c.shots, c.seed, number(c.epsilon));
    for (k, v) in &c.options {
        let _ = write!(out, "  {k}: {v}");
    }
    out.push('\n');
    for f in &report.facts {
        let _ = writeln!(out, "{}={}", f.name, f.value);
    }
    let header = ["variable", "mean", "se", "target", "tolerance", "pass"].map(String::from);
    let rows: Vec<[String; 6]> = report
        .variables
        .iter()
        .map(|v| [v.name.clone(), number(v.mean), cell(v.se), cell(v.target), cell(v.tolerance), pass_cell(v.pass)])
        .collect();
    let mut widths = header.clone().map(|h| h.len());
    for r in &rows {
        for (w, s) in widths.iter_mut().zip(r) {
            *w = (*w).max(s.len());
        }
    }
    for r in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = r
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if let Some(n) = report.catalog_size {
        let _ = writeln!(out, "catalog size: {n}");
    }
    let _ = writeln!(out, "result: {}", if report.pass { "pass" } else { "fail" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn echo() -> ConfigEcho {
        ConfigEcho { experiment: "demo".into(), shots: 10, seed: 1, epsilon: 1e-3, options: BTreeMap::new() }
    }

    #[test]
    fn rounding() {
        assert_eq!(round6(0.853553390593), 0.853553);
        assert_eq!(round6(6.0), 6.0);
        assert_eq!(round6(-1.23456789e-7), -1.23457e-7);
        assert_eq!(round6(0.0), 0.0);
        assert_eq!(number(1e-12), "1e-12");
        assert_eq!(number(0.5625), "0.5625");
        assert_eq!(number(-2.5e-5), "-2.5e-5");
        assert!(round6(f64::NAN).is_nan());
    }

    #[test]
    fn empty_report_in_every_format() {
        let r = RunReport::new(echo());
        let json: serde_json::Value = serde_json::from_str(&emit_report(&r, Format::Json)).unwrap();
        assert_eq!(json["variables"], serde_json::json!([]));
        assert_eq!(emit_report(&r, Format::Csv), "variable,mean,se,target,tolerance,pass\n");
        let text = emit_report(&r, Format::Text);
        assert!(text.contains("variable  mean  se  target  tolerance  pass\n"));
        assert!(text.ends_with("result: pass\n"));
    }

    #[test]
    fn csv_rows() {
        let mut r = RunReport::new(echo());
        r.push(Variable::checked("cabello_sum", 6.0, Some(0.0), 6.0, 0.02));
        r.push(Variable::observed("rate", 0.5, None));
        let csv = emit_report(&r, Format::Csv);
        assert_eq!(csv, "variable,mean,se,target,tolerance,pass\ncabello_sum,6,0,6,0.02,true\nrate,0.5,,,,\n");
    }

    #[test]
    fn failed_variable_fails_the_report() {
        let mut r = RunReport::new(echo());
        r.push(Variable::within_sigmas("x", 0.9, 0.01, 0.5, 4.0, 0.0));
        assert!(!r.pass);
        assert!(emit_report(&r, Format::Text).ends_with("result: fail\n"));
    }

    #[test]
    fn duration_is_not_rendered() {
        let mut a = RunReport::new(echo());
        a.duration = Some(Duration::from_millis(3));
        let b = RunReport::new(echo());
        for f in [Format::Json, Format::Csv, Format::Text] {
            assert_eq!(emit_report(&a, f), emit_report(&b, f));
        }
    }

    proptest! {
        #[test]
        fn json_round_trips(
            values in prop::collection::vec((-1e6f64..1e6, 0.0f64..10.0, any::<bool>()), 0..8),
        ) {
            let mut r = RunReport::new(echo());
            r.fact("obstruction", true);
            for (i, (m, se, with_target)) in values.into_iter().enumerate() {
                if with_target {
                    r.push(Variable::within_sigmas(format!("v{i}"), m, se, m.round(), 4.0, 0.01));
                } else {
                    r.push(Variable::observed(format!("v{i}"), m, Some(se)));
                }
            }
            let text = emit_report(&r, Format::Json);
            let back: RunReport = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(emit_report(&back, Format::Json), text);
        }
    }
}
