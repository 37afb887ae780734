//! Numerical checks of the estimates satisfied by Rothe sequences, and the
//! catalog of test problems they run on.

mod convolution;
mod estimates;
mod problems;
mod sandwich;
mod touch;

pub use convolution::{
    convolution_properties, inf_convolution, inf_convolution_closed, semiconvexity_check,
    sup_convolution, sup_convolution_closed,
};
pub use estimates::{
    first_step_bounds, gronwall_bound, gronwall_recursion, increment_report, ladder_stability,
    lipschitz_constant, lipschitz_in_time, stability_ratio,
};
pub use problems::{
    exact_residual_probe, manufactured_problem, single_node_problem, TestProblem, PROBLEM_NAMES,
};
pub use sandwich::{fourth_difference_max, pucci_sandwich_check, SandwichSummary};
pub use touch::{
    evaluate_trial, viscosity_touch_test, Direction as TouchDirection, TouchConfig, TouchTrial,
    TrialOutcome,
};

/// One named numerical check: `margin = bound - measured`, passing when
/// `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Check of `measured <= bound` up to `tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        let margin = bound - measured;
        Self {
            name: name.into(),
            measured,
            bound,
            margin,
            tolerance,
            passed: margin >= -tolerance,
            detail: String::new(),
        }
    }

    /// Check of `measured >= bound` up to `tolerance`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        let margin = measured - bound;
        Self {
            name: name.into(),
            measured,
            bound,
            margin,
            tolerance,
            passed: margin >= -tolerance,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// A measured quantity reported without a pass/fail verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
    pub measurements: Vec<Measurement>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push(Measurement {
            name: name.into(),
            value,
        });
    }

    pub fn merge(&mut self, other: DiagnosticsReport) {
        self.checks.extend(other.checks);
        self.measurements.extend(other.measurements);
    }

    /// Prefixes every entry name with `prefix/`.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.name = format!("{prefix}/{}", c.name);
        }
        for m in &mut self.measurements {
            m.name = format!("{prefix}/{}", m.name);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
