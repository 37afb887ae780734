use num_traits::{One, Zero};

use super::{Check, DiagnosticsReport};
use crate::error::DiagnosticsError;
use crate::operators::EllipticOperator;
use crate::rothe::RotheSequence;

/// `||z_1||_inf` and `||z_1||_inf / h`.
pub fn first_step_bounds(seq: &RotheSequence) -> Result<DiagnosticsReport, DiagnosticsError> {
    let first = *seq
        .increments
        .first()
        .ok_or_else(|| DiagnosticsError::Precondition("sequence has no steps".into()))?;
    let mut r = DiagnosticsReport::new();
    // z_0 = 0, so the first increment is ||z_1||.
    r.measure("first_step_norm", first);
    r.measure("first_step_ratio", first / seq.h);
    Ok(r)
}

/// `||w_n|| <= ||w_{n-1}|| + h sigma_2(h) + 2 tol` for every `n >= 1`.
pub fn increment_report(
    seq: &RotheSequence,
    op: &dyn EllipticOperator,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    if seq.increments.len() < 2 {
        return Err(DiagnosticsError::Precondition("increment check needs at least two steps".into()));
    }
    let growth = seq.h * op.sigma2(seq.h);
    let tol = 2.0 * seq.max_tolerance();
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0;
    for n in 1..seq.increments.len() {
        let excess = seq.increments[n] - seq.increments[n - 1] - growth;
        if excess > worst {
            worst = excess;
            at = n;
        }
    }
    let mut r = DiagnosticsReport::new();
    r.measure("max_increment", seq.increments.iter().fold(0.0, |m: f64, v| m.max(*v)));
    r.measure("h_sigma2", growth);
    r.check(
        Check::at_most("increment_growth", worst, 0.0, tol)
            .with_detail(format!("worst step n = {at}, h sigma2(h) = {growth:.6e}")),
    );
    Ok(r)
}

/// `L(h) = max_n ||w_n||_inf / h`.
pub fn lipschitz_constant(seq: &RotheSequence) -> f64 {
    seq.increments.iter().fold(0.0, |m: f64, v| m.max(*v)) / seq.h
}

pub fn lipschitz_in_time(seq: &RotheSequence) -> Result<DiagnosticsReport, DiagnosticsError> {
    if seq.increments.is_empty() {
        return Err(DiagnosticsError::Precondition("sequence has no steps".into()));
    }
    let mut r = DiagnosticsReport::new();
    r.measure("lipschitz_constant", lipschitz_constant(seq));
    Ok(r)
}

/// `max / min` of nonnegative values; 1 when all vanish, infinite when only
/// some do.
pub fn stability_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Checks `max / min <= limit` across ladder levels.
pub fn ladder_stability(name: &str, values: &[f64], limit: f64) -> Check {
    let ratio = stability_ratio(values);
    let listed = values
        .iter()
        .map(|v| format!("{v:.6e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Check::at_most(name, ratio, limit, 0.0).with_detail(format!("levels: {listed}"))
}

fn check_inputs<T: Zero + PartialOrd>(v0: &T, b: &[T], d: &[T]) -> Result<(), DiagnosticsError> {
    if b.len() != d.len() {
        return Err(DiagnosticsError::LengthMismatch(b.len(), d.len()));
    }
    if *v0 < T::zero() {
        return Err(DiagnosticsError::NegativeInput(0));
    }
    for (i, (bi, di)) in b.iter().zip(d).enumerate() {
        if *bi < T::zero() || *di < T::zero() {
            return Err(DiagnosticsError::NegativeInput(i + 1));
        }
    }
    Ok(())
}

/// `v_0 prod_i B_i + sum_i D_i prod_{j>i} B_j`, evaluated term by term.
///
/// Generic so that exact rational arithmetic can be used to confirm equality
/// with [`gronwall_recursion`].
pub fn gronwall_bound<T>(v0: T, b: &[T], d: &[T]) -> Result<T, DiagnosticsError>
where
    T: Zero + One + Clone + PartialOrd,
{
    check_inputs(&v0, b, d)?;
    let product = |from: usize| b[from..].iter().cloned().fold(T::one(), |p, x| p * x);
    let mut total = v0 * product(0);
    for i in 0..d.len() {
        total = total + d[i].clone() * product(i + 1);
    }
    Ok(total)
}

/// The extremal recursion `v_{i+1} = B_i v_i + D_i`; returns `v_n`.
pub fn gronwall_recursion<T>(v0: T, b: &[T], d: &[T]) -> Result<T, DiagnosticsError>
where
    T: Zero + One + Clone + PartialOrd,
{
    check_inputs(&v0, b, d)?;
    Ok(b.iter()
        .zip(d)
        .fold(v0, |v, (bi, di)| bi.clone() * v + di.clone()))
}
