//! Experiments and property suites with structured pass/fail reports.

mod bounds;
mod comparison;
mod experiments;
mod operator;
mod sliding;

pub use bounds::{bounds_suite, radial_lower_bound};
pub use comparison::{comparison_suite, hostile_solution};
pub use experiments::{
    counterexample_check, counterexample_field, initial_field, liouville_experiment,
    robustness_experiment, sweep_experiment, Artifacts,
};
pub use operator::operator_suite;
pub use sliding::{sliding_radius, Sliding};

use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Preconditions could not be met; not a pass.
    Skipped,
    /// Recorded measurement without a pass criterion.
    Info,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub tolerance: Option<f64>,
    pub note: String,
}

/// Whole-report verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// No failures, but at least one check was skipped.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub outcome: Outcome,
    /// Resolved configuration and seed.
    pub inputs: BTreeMap<String, String>,
    /// Grid, kernel and solver facts of the run.
    pub metadata: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    /// Seconds of wall time; kept out of the serialized artifacts.
    #[serde(skip)]
    pub wall_time: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Report {
    pub fn new(experiment: &str, inputs: Vec<(String, String)>) -> Report {
        Report {
            experiment: experiment.to_string(),
            outcome: Outcome::Pass,
            inputs: inputs.into_iter().collect(),
            metadata: BTreeMap::new(),
            checks: Vec::new(),
            wall_time: 0.0,
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    fn push(&mut self, name: &str, status: Status, measured: f64, bound: Option<f64>, tol: Option<f64>, note: &str) {
        let mut status = status;
        let mut note = note.to_string();
        let m = finite(measured);
        if m.is_none() && status != Status::Skipped {
            if status == Status::Pass {
                status = Status::Fail;
            }
            note = format!("non-finite measurement {measured}; {note}");
        }
        self.checks.push(Check {
            name: name.to_string(),
            status,
            measured: m,
            bound: bound.and_then(finite),
            tolerance: tol,
            note: note.trim_end_matches("; ").to_string(),
        });
        self.outcome = self.compute_outcome();
    }

    /// Passes iff `measured <= bound + tol`.
    pub fn check_le(&mut self, name: &str, measured: f64, bound: f64, tol: f64) -> bool {
        let ok = measured <= bound + tol;
        self.push(name, if ok { Status::Pass } else { Status::Fail }, measured, Some(bound), Some(tol), "");
        ok
    }

    /// Passes iff `measured >= bound - tol`.
    pub fn check_ge(&mut self, name: &str, measured: f64, bound: f64, tol: f64) -> bool {
        let ok = measured >= bound - tol;
        self.push(name, if ok { Status::Pass } else { Status::Fail }, measured, Some(bound), Some(tol), "");
        ok
    }

    /// A boolean check; `measured` is recorded as 1 or 0.
    pub fn check_true(&mut self, name: &str, ok: bool, note: &str) -> bool {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.push(name, status, if ok { 1.0 } else { 0.0 }, None, None, note);
        ok
    }

    pub fn info(&mut self, name: &str, measured: f64, note: &str) {
        self.push(name, Status::Info, measured, None, None, note);
    }

    pub fn skip(&mut self, name: &str, reason: &str) {
        self.push(name, Status::Skipped, f64::NAN, None, None, reason);
    }

    /// Appends another report's checks with a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: &Report) {
        for c in &other.checks {
            let mut c = c.clone();
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in &other.metadata {
            self.metadata.insert(format!("{prefix}.{k}"), v.clone());
        }
        self.outcome = self.compute_outcome();
    }

    fn compute_outcome(&self) -> Outcome {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            Outcome::Fail
        } else if self.checks.iter().any(|c| c.status == Status::Skipped) {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Process exit code: 0 on pass, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat `name,status,measured,bound,tolerance,note` CSV.
    pub fn to_csv(&self) -> String {
        use crate::grid::fmt17;
        let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
        let mut s = String::from("name,status,measured,bound,tolerance,note\n");
        for c in &self.checks {
            s.push_str(&format!(
                "{},{},{},{},{},\"{}\"\n",
                c.name,
                c.status.name(),
                opt(c.measured),
                opt(c.bound),
                opt(c.tolerance),
                c.note.replace('"', "'")
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_is_conjunction() {
        let mut r = Report::new("t", vec![]);
        assert!(r.check_le("a", 1.0, 2.0, 0.0));
        r.info("b", 3.0, "");
        assert!(r.passed());
        r.skip("c", "no contact point");
        assert_eq!(r.outcome, Outcome::Inconclusive);
        assert!(!r.check_ge("d", 0.0, 1.0, 0.0));
        assert_eq!(r.outcome, Outcome::Fail);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn non_finite_measurement_fails() {
        let mut r = Report::new("t", vec![]);
        r.check_le("a", f64::NAN, 1.0, 0.0);
        assert_eq!(r.checks[0].status, Status::Fail);
        assert!(r.checks[0].measured.is_none());
        assert!(r.to_json().contains("\"measured\": null"));
    }
}
