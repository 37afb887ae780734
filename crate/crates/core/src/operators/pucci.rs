use super::{euclidean_norm, EllipticOperator, Forcing, OperatorForm, Structure};
use crate::error::OperatorError;
use crate::linalg::SymMatrix;

/// `P+(M) = -lambda Tr(M+) + Lambda Tr(M-)`.
pub fn pucci_plus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && big_lambda >= lambda);
    let eig = m.eigenvalues();
    eig[..m.dim()]
        .iter()
        .map(|&e| if e > 0.0 { -lambda * e } else { -big_lambda * e })
        .sum()
}

/// `P-(M) = -Lambda Tr(M+) + lambda Tr(M-)`.
pub fn pucci_minus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && big_lambda >= lambda);
    let eig = m.eigenvalues();
    eig[..m.dim()]
        .iter()
        .map(|&e| if e > 0.0 { -big_lambda * e } else { -lambda * e })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Plus,
    Minus,
}

/// `F = P±(M) ± gamma |p| + c r + f(x, t)`.
///
/// The gradient term carries the same sign as the extremal operator so that
/// `P+` stays convex and `P-` concave in `(M, p)`.
#[derive(Debug, Clone)]
pub struct PucciOperator {
    pub extremal: Extremal,
    pub dim: usize,
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
    pub zeroth_order: f64,
    pub forcing: Forcing,
}

impl PucciOperator {
    pub fn new(
        extremal: Extremal,
        dim: usize,
        lambda: f64,
        big_lambda: f64,
        gamma: f64,
        zeroth_order: f64,
        forcing: Forcing,
    ) -> Result<Self, OperatorError> {
        Structure::new(lambda, big_lambda, gamma)?;
        if !(1..=3).contains(&dim) {
            return Err(OperatorError::Invalid(format!("unsupported dimension {dim}")));
        }
        if !(zeroth_order >= 0.0 && zeroth_order.is_finite()) {
            return Err(OperatorError::NegativeZerothOrder {
                index: 0,
                c: zeroth_order,
            });
        }
        Ok(Self {
            extremal,
            dim,
            lambda,
            big_lambda,
            gamma,
            zeroth_order,
            forcing,
        })
    }

    /// Pointwise contribution of one directional second difference `s`.
    #[inline]
    pub fn phi(&self, s: f64) -> f64 {
        match self.extremal {
            Extremal::Plus => {
                if s > 0.0 {
                    -self.lambda * s
                } else {
                    -self.big_lambda * s
                }
            }
            Extremal::Minus => {
                if s > 0.0 {
                    -self.big_lambda * s
                } else {
                    -self.lambda * s
                }
            }
        }
    }

    /// A slope of `phi` at `s` (an element of its generalized derivative).
    #[inline]
    pub fn phi_slope(&self, s: f64) -> f64 {
        match self.extremal {
            Extremal::Plus => {
                if s > 0.0 {
                    -self.lambda
                } else {
                    -self.big_lambda
                }
            }
            Extremal::Minus => {
                if s > 0.0 {
                    -self.big_lambda
                } else {
                    -self.lambda
                }
            }
        }
    }

    pub fn sign(&self) -> f64 {
        match self.extremal {
            Extremal::Plus => 1.0,
            Extremal::Minus => -1.0,
        }
    }
}

impl EllipticOperator for PucciOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64 {
        let second = match self.extremal {
            Extremal::Plus => pucci_plus(m, self.lambda, self.big_lambda),
            Extremal::Minus => pucci_minus(m, self.lambda, self.big_lambda),
        };
        second + self.sign() * self.gamma * euclidean_norm(p)
            + self.zeroth_order * r
            + self.forcing.value(x, t)
    }

    fn structure(&self) -> Structure {
        Structure {
            lambda: self.lambda,
            big_lambda: self.big_lambda,
            gamma: self.gamma,
        }
    }

    fn omega(&self, _radius: f64, s: f64) -> f64 {
        self.zeroth_order * s.max(0.0)
    }

    fn sigma2(&self, h: f64) -> f64 {
        self.forcing.sigma2(h)
    }

    fn is_time_independent(&self) -> bool {
        self.forcing.is_time_independent()
    }

    fn zeroth_order_lipschitz(&self) -> f64 {
        self.zeroth_order
    }

    fn form(&self) -> OperatorForm<'_> {
        OperatorForm::Pucci(self)
    }

    fn name(&self) -> &str {
        match self.extremal {
            Extremal::Plus => "pucci_plus",
            Extremal::Minus => "pucci_minus",
        }
    }
}
