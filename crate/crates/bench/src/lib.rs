//! Shared fixtures for the benchmarks.

use rothe_core::diagnostics::{manufactured_problem, TestProblem};
use rothe_core::{run_rothe, GridFunction, RotheConfig, RotheSequence, Scheme};

pub fn problem(name: &str) -> TestProblem {
    manufactured_problem(name).expect("catalog problem")
}

/// A solved run of `name` at step `h` on its default grid.
pub fn solved(name: &str, h: f64) -> (TestProblem, RotheSequence) {
    let p = problem(name);
    let seq = run_rothe(p.operator.as_ref(), &Scheme::monotone(p.grid), h, p.horizon, &RotheConfig::default())
        .expect("catalog problems solve");
    (p, seq)
}

/// The iterate at the middle of a run, a representative `z_prev`.
pub fn midpoint_iterate(seq: &RotheSequence) -> GridFunction {
    seq.iterate(seq.steps() / 2).expect("all iterates kept").clone()
}
