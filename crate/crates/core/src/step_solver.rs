//! Solvers for one implicit step `F_h(z) + (z - z_prev) / h = 0`.

use crate::error::{NonConvergence, SolveError};
use crate::grid::{assemble_residual, DiscreteOperator, GridFunction, Scheme};
use crate::linalg::BandMatrix;
use crate::operators::EllipticOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMethod {
    Newton,
    PolicyIteration,
    PseudoTime,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::Newton => "newton",
            SolveMethod::PolicyIteration => "policy_iteration",
            SolveMethod::PseudoTime => "pseudo_time",
        }
    }
}

/// Which method `solve_step` tries first. Every choice falls back to
/// pseudo-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Policy iteration for sup/inf-of-linear forms, Newton otherwise.
    #[default]
    Auto,
    Newton,
    PolicyIteration,
    PseudoTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    /// Sup-norm residual target; multiplied by `1 + 1/h` when
    /// `scale_tolerance_with_h` is set.
    pub tolerance: f64,
    pub scale_tolerance_with_h: bool,
    pub max_newton_iters: usize,
    pub max_policy_iters: usize,
    pub max_pseudo_time_iters: usize,
    /// Initial Newton step factor in `(0, 1]`.
    pub damping: f64,
    pub fd_epsilon: f64,
    /// Multiplies the safe pseudo-time step `1 / (1/h + L_h)`.
    pub pseudo_time_scale: f64,
    pub method: SolverChoice,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            scale_tolerance_with_h: true,
            max_newton_iters: 60,
            max_policy_iters: 60,
            max_pseudo_time_iters: 200_000,
            damping: 1.0,
            fd_epsilon: 1e-7,
            pseudo_time_scale: 1.0,
            method: SolverChoice::Auto,
        }
    }
}

impl StepConfig {
    pub fn effective_tolerance(&self, h: f64) -> f64 {
        if self.scale_tolerance_with_h {
            self.tolerance * (1.0 + 1.0 / h)
        } else {
            self.tolerance
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive");
        }
        if self.max_newton_iters == 0 || self.max_policy_iters == 0 || self.max_pseudo_time_iters == 0 {
            return bad("iteration caps must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.fd_epsilon > 0.0) {
            return bad("fd_epsilon must be positive");
        }
        if !(self.pseudo_time_scale > 0.0 && self.pseudo_time_scale.is_finite()) {
            return bad("pseudo_time_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSolveReport {
    pub method_used: SolveMethod,
    /// Iterations of the method that produced the result, plus those spent
    /// in any method tried before it.
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub tolerance: f64,
    pub converged: bool,
    /// Methods abandoned before `method_used` took over.
    pub fallbacks: Vec<SolveMethod>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Ctx<'a> {
    d: DiscreteOperator<'a>,
    z_prev: &'a GridFunction,
    h: f64,
    t: f64,
    tol: f64,
    cfg: &'a StepConfig,
}

/// Outcome of one method: final iterate, residual norm, iteration count.
struct Attempt {
    z: GridFunction,
    norm: f64,
    iterations: usize,
    converged: bool,
}

impl<'a> Ctx<'a> {
    fn new(
        op: &'a dyn EllipticOperator,
        scheme: &'a Scheme,
        z_prev: &'a GridFunction,
        h: f64,
        t: f64,
        cfg: &'a StepConfig,
    ) -> Result<Self, SolveError> {
        cfg.validate()?;
        if !(h > 0.0) {
            return Err(crate::error::GridError::NonPositiveStep(h).into());
        }
        if *z_prev.grid() != scheme.grid {
            return Err(crate::error::GridError::GridMismatch.into());
        }
        Ok(Self {
            d: DiscreteOperator::new(op, scheme)?,
            z_prev,
            h,
            t,
            tol: cfg.effective_tolerance(h),
            cfg,
        })
    }

    fn residual(&self, z: &GridFunction) -> Vec<f64> {
        self.d.residual(z, self.z_prev, self.h, self.t)
    }

    fn band(&self) -> BandMatrix {
        let n = self.d.grid().len();
        let b = self.d.bandwidth();
        BandMatrix::zeros(n, b, b)
    }

    fn newton(&self, z0: GridFunction) -> Result<Attempt, SolveError> {
        let mut z = z0;
        let mut r = self.residual(&z);
        let mut norm = sup(&r);
        let n = z.values().len();
        for it in 1..=self.cfg.max_newton_iters {
            if norm <= self.tol {
                return Ok(Attempt { z, norm, iterations: it - 1, converged: true });
            }
            let mut j = self.band();
            for k in 0..n {
                for (col, v) in self.d.jacobian_row(&z, k, self.t, self.cfg.fd_epsilon) {
                    j.add_to(k, col, v)?;
                }
                j.add_to(k, k, 1.0 / self.h)?;
            }
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let delta = j.solve(&rhs)?;
            let mut alpha = self.cfg.damping;
            loop {
                let trial = GridFunction::from_values(
                    *z.grid(),
                    z.values().iter().zip(&delta).map(|(a, b)| a + alpha * b).collect(),
                )?;
                let r_trial = self.residual(&trial);
                let n_trial = sup(&r_trial);
                if n_trial.is_finite() && n_trial <= (1.0 - 1e-4 * alpha) * norm {
                    z = trial;
                    r = r_trial;
                    norm = n_trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-10 {
                    // Damping underflow: the active-selection model has stalled.
                    return Ok(Attempt { z, norm, iterations: it, converged: false });
                }
            }
        }
        let converged = norm <= self.tol;
        Ok(Attempt {
            z,
            norm,
            iterations: self.cfg.max_newton_iters,
            converged,
        })
    }

    fn policy(&self, z0: GridFunction) -> Result<Attempt, SolveError> {
        let n = z0.values().len();
        let grid = *z0.grid();
        let mut policy: Vec<usize> = (0..n).map(|k| self.d.active_control(&z0, k, self.t).1).collect();
        let zero = GridFunction::zeros(grid);
        let mut z = z0;
        let mut norm = sup(&self.residual(&z));
        if norm <= self.tol {
            return Ok(Attempt { z, norm, iterations: 0, converged: true });
        }
        for it in 1..=self.cfg.max_policy_iters {
            let mut a = self.band();
            let mut rhs = Vec::with_capacity(n);
            for (k, &pk) in policy.iter().enumerate() {
                for (col, v) in self.d.control_row(pk, k) {
                    a.add_to(k, col, v)?;
                }
                a.add_to(k, k, 1.0 / self.h)?;
                // The control's value at z = 0 is its source term.
                let source = self.d.control_value(pk, &zero, k, self.t);
                rhs.push(self.z_prev.get(k) / self.h - source);
            }
            z = GridFunction::from_values(grid, a.solve(&rhs)?)?;
            norm = sup(&self.residual(&z));
            let next: Vec<usize> = (0..n).map(|k| self.d.active_control(&z, k, self.t).1).collect();
            if next == policy {
                return Ok(Attempt { z, norm, iterations: it, converged: norm <= self.tol });
            }
            policy = next;
        }
        Ok(Attempt {
            z,
            norm,
            iterations: self.cfg.max_policy_iters,
            converged: norm <= self.tol,
        })
    }

    fn pseudo_time(&self, z0: GridFunction) -> Attempt {
        let tau = self.cfg.pseudo_time_scale / (1.0 / self.h + self.d.lipschitz_bound());
        let mut z = z0;
        let mut r = self.residual(&z);
        let mut norm = sup(&r);
        let start = norm.max(self.tol);
        let mut best = (z.clone(), norm);
        for it in 0..self.cfg.max_pseudo_time_iters {
            if norm <= self.tol {
                return Attempt { z, norm, iterations: it, converged: true };
            }
            if !norm.is_finite() || norm > 1e6 * start {
                return Attempt {
                    z: best.0,
                    norm: best.1,
                    iterations: it,
                    converged: false,
                };
            }
            for (zk, rk) in z.values_mut().iter_mut().zip(&r) {
                *zk -= tau * rk;
            }
            r = self.residual(&z);
            norm = sup(&r);
            if norm < best.1 {
                best = (z.clone(), norm);
            }
        }
        let converged = norm <= self.tol;
        Attempt {
            z,
            norm,
            iterations: self.cfg.max_pseudo_time_iters,
            converged,
        }
    }
}

fn finish(
    attempt: Attempt,
    method: SolveMethod,
    prior_iterations: usize,
    fallbacks: Vec<SolveMethod>,
    tol: f64,
) -> Result<(GridFunction, StepSolveReport), SolveError> {
    let report = StepSolveReport {
        method_used: method,
        iterations: prior_iterations + attempt.iterations,
        final_residual_norm: attempt.norm,
        tolerance: tol,
        converged: attempt.converged,
        fallbacks,
    };
    if attempt.converged {
        Ok((attempt.z, report))
    } else {
        Err(SolveError::NonConvergence(Box::new(NonConvergence {
            best: attempt.z,
            report,
        })))
    }
}

/// Recomputes the residual through [`assemble_residual`], independently of
/// the solver's bookkeeping.
fn certify(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z: &GridFunction,
    z_prev: &GridFunction,
    h: f64,
    t: f64,
) -> Result<f64, SolveError> {
    Ok(assemble_residual(op, scheme, z, z_prev, h, t)?.sup_norm())
}

/// Solves one step starting from `initial` (default `z_prev`).
///
/// Tries the configured fast method first and falls back to pseudo-time
/// relaxation if it stalls or exhausts its cap; the report lists the
/// abandoned methods.
pub fn solve_step(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z_prev: &GridFunction,
    h: f64,
    t_next: f64,
    cfg: &StepConfig,
    initial: Option<&GridFunction>,
) -> Result<(GridFunction, StepSolveReport), SolveError> {
    let ctx = Ctx::new(op, scheme, z_prev, h, t_next, cfg)?;
    let z0 = match initial {
        Some(z) => {
            z.ensure_same_grid(z_prev)?;
            z.clone()
        }
        None => z_prev.clone(),
    };
    let first = match cfg.method {
        SolverChoice::Auto if ctx.d.is_control_form() => SolveMethod::PolicyIteration,
        SolverChoice::Auto | SolverChoice::Newton => SolveMethod::Newton,
        SolverChoice::PolicyIteration => {
            if !ctx.d.is_control_form() {
                return Err(SolveError::Config(format!(
                    "policy iteration needs a sup/inf-of-linear operator, got {}",
                    op.name()
                )));
            }
            SolveMethod::PolicyIteration
        }
        SolverChoice::PseudoTime => SolveMethod::PseudoTime,
    };
    let mut fallbacks = Vec::new();
    let mut spent = 0;
    let mut start = z0;
    if first != SolveMethod::PseudoTime {
        let attempt = match first {
            SolveMethod::Newton => ctx.newton(start.clone()),
            _ => ctx.policy(start.clone()),
        };
        match attempt {
            Ok(a) => {
                if a.converged {
                    let norm = certify(op, scheme, &a.z, z_prev, h, t_next)?;
                    if norm <= ctx.tol {
                        return finish(Attempt { norm, ..a }, first, 0, fallbacks, ctx.tol);
                    }
                }
                spent = a.iterations;
                start = a.z;
            }
            // A failed linear solve leaves the starting iterate untouched.
            Err(SolveError::Linalg(_)) => {}
            Err(e) => return Err(e),
        }
        fallbacks.push(first);
    }
    let a = ctx.pseudo_time(start);
    let a = if a.converged {
        let norm = certify(op, scheme, &a.z, z_prev, h, t_next)?;
        Attempt {
            converged: norm <= ctx.tol,
            norm,
            ..a
        }
    } else {
        a
    };
    finish(a, SolveMethod::PseudoTime, spent, fallbacks, ctx.tol)
}

/// Explicit relaxation `z <- z - tau R(z)` with `tau = scale / (1/h + L_h)`.
///
/// Contracts in the sup norm for monotone schemes at `scale <= 1`; stops
/// with `NonConvergence` on divergence or when the cap is exhausted.
pub fn pseudo_time_relaxation(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z_prev: &GridFunction,
    h: f64,
    t_next: f64,
    cfg: &StepConfig,
) -> Result<(GridFunction, StepSolveReport), SolveError> {
    let ctx = Ctx::new(op, scheme, z_prev, h, t_next, cfg)?;
    let a = ctx.pseudo_time(z_prev.clone());
    finish(a, SolveMethod::PseudoTime, 0, Vec::new(), ctx.tol)
}

/// Howard's policy iteration for sup/inf-of-linear operators: freeze the
/// active controls, solve the linear system exactly, reselect, repeat until
/// the policy is stable.
pub fn policy_iteration(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z_prev: &GridFunction,
    h: f64,
    t_next: f64,
    cfg: &StepConfig,
) -> Result<(GridFunction, StepSolveReport), SolveError> {
    let ctx = Ctx::new(op, scheme, z_prev, h, t_next, cfg)?;
    if !ctx.d.is_control_form() {
        return Err(SolveError::Config(format!(
            "policy iteration needs a sup/inf-of-linear operator, got {}",
            op.name()
        )));
    }
    let a = ctx.policy(z_prev.clone())?;
    finish(a, SolveMethod::PolicyIteration, 0, Vec::new(), ctx.tol)
}

/// Semismooth Newton alone, without fallback.
pub fn newton(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z_prev: &GridFunction,
    h: f64,
    t_next: f64,
    cfg: &StepConfig,
    initial: Option<&GridFunction>,
) -> Result<(GridFunction, StepSolveReport), SolveError> {
    let ctx = Ctx::new(op, scheme, z_prev, h, t_next, cfg)?;
    let z0 = initial.cloned().unwrap_or_else(|| z_prev.clone());
    let a = ctx.newton(z0)?;
    finish(a, SolveMethod::Newton, 0, Vec::new(), ctx.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::linalg::SymMatrix;
    use crate::operators::{Forcing, LinearOperator};

    fn single_node() -> (LinearOperator, Scheme) {
        let op = LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::Affine { value: 1.0, rate: 0.0 })
            .unwrap();
        (op, Scheme::monotone(Grid::interval(0.0, 1.0, 1).unwrap()))
    }

    #[test]
    fn zero_problem_needs_no_iterations() {
        let op = LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::Zero).unwrap();
        let s = Scheme::monotone(Grid::interval(0.0, 1.0, 5).unwrap());
        let zp = GridFunction::zeros(s.grid);
        for method in [SolverChoice::Newton, SolverChoice::PolicyIteration, SolverChoice::PseudoTime] {
            let cfg = StepConfig { method, ..StepConfig::default() };
            let (z, rep) = solve_step(&op, &s, &zp, 0.1, 0.1, &cfg, None).unwrap();
            assert_eq!(z.sup_norm(), 0.0);
            assert_eq!(rep.iterations, 0);
        }
    }

    #[test]
    fn single_node_closed_form() {
        let (op, s) = single_node();
        let zp = GridFunction::zeros(s.grid);
        let expected = -0.1 / 1.8;
        for method in [SolverChoice::Newton, SolverChoice::PolicyIteration, SolverChoice::PseudoTime] {
            let cfg = StepConfig { method, ..StepConfig::default() };
            let (z, rep) = solve_step(&op, &s, &zp, 0.1, 0.1, &cfg, None).unwrap();
            assert!((z.get(0) - expected).abs() < 1e-11, "{method:?}: {}", z.get(0));
            assert!(rep.converged && rep.final_residual_norm <= rep.tolerance);
        }
    }

    #[test]
    fn oversized_pseudo_time_step_is_reported() {
        let op = LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::Affine { value: 1.0, rate: 0.0 })
            .unwrap();
        let s = Scheme::monotone(Grid::interval(0.0, 1.0, 15).unwrap());
        let zp = GridFunction::zeros(s.grid);
        let cfg = StepConfig {
            pseudo_time_scale: 10.0,
            ..StepConfig::default()
        };
        match pseudo_time_relaxation(&op, &s, &zp, 0.1, 0.1, &cfg) {
            Err(SolveError::NonConvergence(nc)) => {
                assert!(!nc.report.converged);
                assert!(nc.report.iterations < cfg.max_pseudo_time_iters);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let (op, s) = single_node();
        let zp = GridFunction::zeros(s.grid);
        let cfg = StepConfig { damping: 0.0, ..StepConfig::default() };
        assert!(matches!(solve_step(&op, &s, &zp, 0.1, 0.1, &cfg, None), Err(SolveError::Config(_))));
        assert!(solve_step(&op, &s, &zp, 0.0, 0.1, &StepConfig::default(), None).is_err());
    }
}
