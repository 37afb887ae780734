//! Fully nonlinear operators `F(M, p, r, x, t)` and their structure constants.
//!
//! Sign convention: uniform ellipticity means `F` is *decreasing* in the
//! Hessian argument, so `F(M) = -Tr(M)` (the negative Laplacian) is admissible
//! and `+Tr(M)` is not.

mod catalog;
mod forcing;
mod pucci;
mod validate;

use std::fmt;

pub use catalog::{BellmanOperator, Combiner, Control, FnOperator, LinearOperator};
pub use forcing::Forcing;
pub use pucci::{pucci_minus, pucci_plus, Extremal, PucciOperator};
pub use validate::{
    check_structure_condition, check_uniform_ellipticity, random_positive_definite,
    random_symmetric, structure_margins, StructureSample, ValidationReport, Witness,
};

use crate::error::OperatorError;
use crate::linalg::SymMatrix;

/// Ellipticity and gradient constants of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Structure {
    pub lambda: f64,
    pub big_lambda: f64,
    /// Lipschitz constant of `F` in the gradient argument.
    pub gamma: f64,
}

impl Structure {
    pub fn new(lambda: f64, big_lambda: f64, gamma: f64) -> Result<Self, OperatorError> {
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return Err(OperatorError::InvalidEllipticity { lambda, big_lambda });
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(OperatorError::Invalid(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self {
            lambda,
            big_lambda,
            gamma,
        })
    }
}

/// How the grid layer should discretize an operator.
#[derive(Debug, Clone, Copy)]
pub enum OperatorForm<'a> {
    /// Extremal operator plus upwinded gradient term.
    Pucci(&'a PucciOperator),
    /// Sup or inf over linear controls (a single control is a linear operator).
    Controls(&'a [Control], Combiner),
    /// No known structure: evaluate `F` on finite-difference derivatives.
    Generic,
}

/// A uniformly elliptic operator `F(M, p, r, x, t)`.
///
/// Implementations must be pure: the solvers and samplers call `evaluate`
/// from several threads.
pub trait EllipticOperator: Send + Sync + fmt::Debug {
    /// Spatial dimension the operator is defined on.
    fn dim(&self) -> usize;

    fn evaluate(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64;

    fn structure(&self) -> Structure;

    /// Zeroth-order modulus `omega_R(s)`; must vanish at `s = 0`.
    fn omega(&self, radius: f64, s: f64) -> f64;

    /// Time modulus `sigma_2(h)` of `F(M, p, r, x, .)`.
    fn sigma2(&self, h: f64) -> f64;

    fn is_time_independent(&self) -> bool;

    /// Upper bound on `dF/dr`; sizes the pseudo-time step.
    fn zeroth_order_lipschitz(&self) -> f64 {
        0.0
    }

    fn form(&self) -> OperatorForm<'_> {
        OperatorForm::Generic
    }

    fn name(&self) -> &str;

    /// `f(x) = F(0, 0, 0, x, t)`.
    fn source(&self, x: &[f64], t: f64) -> f64 {
        let d = self.dim();
        self.evaluate(&SymMatrix::zeros(d), &vec![0.0; d], 0.0, x, t)
    }
}

/// Evaluates `F` after checking that `M`, `p` and `x` match its dimension.
pub fn evaluate_operator(
    op: &dyn EllipticOperator,
    m: &SymMatrix,
    p: &[f64],
    r: f64,
    x: &[f64],
    t: f64,
) -> Result<f64, OperatorError> {
    let d = op.dim();
    let check = |got: usize, what: &'static str| {
        if got == d {
            Ok(())
        } else {
            Err(OperatorError::DimensionMismatch {
                expected: d,
                got,
                what,
            })
        }
    };
    check(m.dim(), "Hessian")?;
    check(p.len(), "gradient")?;
    check(x.len(), "point")?;
    Ok(op.evaluate(m, p, r, x, t))
}

#[inline]
pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
