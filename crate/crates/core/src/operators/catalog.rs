use std::fmt;
use std::sync::Arc;

use super::{EllipticOperator, Forcing, OperatorForm, Structure};
use crate::error::OperatorError;
use crate::linalg::SymMatrix;

/// One linear control `-Tr(A M) + b.p + c r + f(x, t)`.
#[derive(Debug, Clone)]
pub struct Control {
    pub a: SymMatrix,
    pub b: Vec<f64>,
    pub c: f64,
    pub forcing: Forcing,
}

impl Control {
    pub fn new(a: SymMatrix, b: Vec<f64>, c: f64, forcing: Forcing) -> Self {
        Self { a, b, c, forcing }
    }

    #[inline]
    pub fn value(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64 {
        let drift: f64 = self.b.iter().zip(p).map(|(b, p)| b * p).sum();
        -self.a.trace_product(m) + drift + self.c * r + self.forcing.value(x, t)
    }

    fn drift_norm(&self) -> f64 {
        super::euclidean_norm(&self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    Sup,
    Inf,
}

impl Combiner {
    #[inline]
    pub fn pick(&self, current: f64, candidate: f64) -> bool {
        match self {
            Combiner::Sup => candidate > current,
            Combiner::Inf => candidate < current,
        }
    }
}

/// `F = sup_k (or inf_k)` over a finite family of linear controls.
#[derive(Debug, Clone)]
pub struct BellmanOperator {
    controls: Vec<Control>,
    combiner: Combiner,
    lambda: f64,
    big_lambda: f64,
    dim: usize,
}

impl BellmanOperator {
    /// Checks that every coefficient matrix has spectrum in `[lambda, Lambda]`
    /// and every zeroth-order coefficient is nonnegative.
    pub fn new(
        controls: Vec<Control>,
        combiner: Combiner,
        lambda: f64,
        big_lambda: f64,
    ) -> Result<Self, OperatorError> {
        Structure::new(lambda, big_lambda, 0.0)?;
        let dim = controls
            .first()
            .ok_or_else(|| OperatorError::Invalid("a Bellman operator needs at least one control".into()))?
            .a
            .dim();
        let slack = 1e-12 * big_lambda;
        for (index, ctl) in controls.iter().enumerate() {
            if ctl.a.dim() != dim || ctl.b.len() != dim {
                return Err(OperatorError::DimensionMismatch {
                    expected: dim,
                    got: if ctl.a.dim() != dim { ctl.a.dim() } else { ctl.b.len() },
                    what: "control",
                });
            }
            let eig = ctl.a.eigenvalues();
            let (min, max) = (eig[0], eig[dim - 1]);
            if min < lambda - slack || max > big_lambda + slack {
                return Err(OperatorError::ControlOutOfRange {
                    index,
                    min,
                    max,
                    lambda,
                    big_lambda,
                });
            }
            if !(ctl.c >= 0.0) {
                return Err(OperatorError::NegativeZerothOrder { index, c: ctl.c });
            }
        }
        Ok(Self {
            controls,
            combiner,
            lambda,
            big_lambda,
            dim,
        })
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }
}

/// Value of the combined controls and the index of the active one.
pub(crate) fn combine_controls(
    controls: &[Control],
    combiner: Combiner,
    mut value_of: impl FnMut(&Control) -> f64,
) -> (f64, usize) {
    let mut best = value_of(&controls[0]);
    let mut arg = 0;
    for (k, ctl) in controls.iter().enumerate().skip(1) {
        let v = value_of(ctl);
        if combiner.pick(best, v) {
            best = v;
            arg = k;
        }
    }
    (best, arg)
}

fn controls_max_c(controls: &[Control]) -> f64 {
    controls.iter().fold(0.0, |m, c| m.max(c.c))
}

impl EllipticOperator for BellmanOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64 {
        combine_controls(&self.controls, self.combiner, |c| c.value(m, p, r, x, t)).0
    }

    fn structure(&self) -> Structure {
        Structure {
            lambda: self.lambda,
            big_lambda: self.big_lambda,
            gamma: self.controls.iter().fold(0.0, |g, c| g.max(c.drift_norm())),
        }
    }

    fn omega(&self, _radius: f64, s: f64) -> f64 {
        controls_max_c(&self.controls) * s.max(0.0)
    }

    fn sigma2(&self, h: f64) -> f64 {
        self.controls
            .iter()
            .fold(0.0, |m, c| m.max(c.forcing.sigma2(h)))
    }

    fn is_time_independent(&self) -> bool {
        self.controls.iter().all(|c| c.forcing.is_time_independent())
    }

    fn zeroth_order_lipschitz(&self) -> f64 {
        controls_max_c(&self.controls)
    }

    fn form(&self) -> OperatorForm<'_> {
        OperatorForm::Controls(&self.controls, self.combiner)
    }

    fn name(&self) -> &str {
        "bellman"
    }
}

/// `F = -Tr(A M) + b.p + c r + f(x, t)` with `A` positive definite.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    control: [Control; 1],
    lambda: f64,
    big_lambda: f64,
}

impl LinearOperator {
    pub fn new(a: SymMatrix, b: Vec<f64>, c: f64, forcing: Forcing) -> Result<Self, OperatorError> {
        let d = a.dim();
        if b.len() != d {
            return Err(OperatorError::DimensionMismatch {
                expected: d,
                got: b.len(),
                what: "drift",
            });
        }
        let eig = a.eigenvalues();
        let (lambda, big_lambda) = (eig[0], eig[d - 1]);
        Structure::new(lambda, big_lambda, 0.0)?;
        if !(c >= 0.0) {
            return Err(OperatorError::NegativeZerothOrder { index: 0, c });
        }
        Ok(Self {
            control: [Control::new(a, b, c, forcing)],
            lambda,
            big_lambda,
        })
    }

    pub fn control(&self) -> &Control {
        &self.control[0]
    }
}

impl EllipticOperator for LinearOperator {
    fn dim(&self) -> usize {
        self.control[0].a.dim()
    }

    fn evaluate(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64 {
        self.control[0].value(m, p, r, x, t)
    }

    fn structure(&self) -> Structure {
        Structure {
            lambda: self.lambda,
            big_lambda: self.big_lambda,
            gamma: self.control[0].drift_norm(),
        }
    }

    fn omega(&self, _radius: f64, s: f64) -> f64 {
        self.control[0].c * s.max(0.0)
    }

    fn sigma2(&self, h: f64) -> f64 {
        self.control[0].forcing.sigma2(h)
    }

    fn is_time_independent(&self) -> bool {
        self.control[0].forcing.is_time_independent()
    }

    fn zeroth_order_lipschitz(&self) -> f64 {
        self.control[0].c
    }

    fn form(&self) -> OperatorForm<'_> {
        OperatorForm::Controls(&self.control, Combiner::Sup)
    }

    fn name(&self) -> &str {
        "linear"
    }
}

type EvalFn = dyn Fn(&SymMatrix, &[f64], f64, &[f64], f64) -> f64 + Send + Sync;
type OmegaFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type Sigma2Fn = dyn Fn(f64) -> f64 + Send + Sync;

/// An operator given by closures, for registering custom `F` from code.
///
/// It is discretized generically (finite-difference derivatives, no
/// monotone structure), so prefer the catalog types when one fits.
#[derive(Clone)]
pub struct FnOperator {
    name: String,
    dim: usize,
    structure: Structure,
    eval: Arc<EvalFn>,
    omega: Arc<OmegaFn>,
    sigma2: Arc<Sigma2Fn>,
    time_independent: bool,
    zeroth_order_lipschitz: f64,
}

impl fmt::Debug for FnOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOperator")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("structure", &self.structure)
            .finish_non_exhaustive()
    }
}

impl FnOperator {
    pub fn new<F>(name: impl Into<String>, dim: usize, structure: Structure, eval: F) -> Self
    where
        F: Fn(&SymMatrix, &[f64], f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            structure,
            eval: Arc::new(eval),
            omega: Arc::new(|_, _| 0.0),
            sigma2: Arc::new(|_| 0.0),
            time_independent: true,
            zeroth_order_lipschitz: 0.0,
        }
    }

    /// Zeroth-order modulus and the Lipschitz bound it implies.
    pub fn with_omega<W>(mut self, omega: W, lipschitz: f64) -> Self
    where
        W: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.omega = Arc::new(omega);
        self.zeroth_order_lipschitz = lipschitz;
        self
    }

    pub fn with_time_modulus<S>(mut self, sigma2: S) -> Self
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.sigma2 = Arc::new(sigma2);
        self.time_independent = false;
        self
    }
}

impl EllipticOperator for FnOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, m: &SymMatrix, p: &[f64], r: f64, x: &[f64], t: f64) -> f64 {
        (self.eval)(m, p, r, x, t)
    }

    fn structure(&self) -> Structure {
        self.structure
    }

    fn omega(&self, radius: f64, s: f64) -> f64 {
        (self.omega)(radius, s)
    }

    fn sigma2(&self, h: f64) -> f64 {
        if self.time_independent {
            0.0
        } else {
            (self.sigma2)(h)
        }
    }

    fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    fn zeroth_order_lipschitz(&self) -> f64 {
        self.zeroth_order_lipschitz
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bellman_rejects_out_of_range_controls() {
        let bad = Control::new(SymMatrix::diag(&[3.0]), vec![0.0], 0.0, Forcing::Zero);
        let err = BellmanOperator::new(vec![bad], Combiner::Sup, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, OperatorError::ControlOutOfRange { index: 0, .. }));

        let neg = Control::new(SymMatrix::diag(&[1.0]), vec![0.0], -0.1, Forcing::Zero);
        let err = BellmanOperator::new(vec![neg], Combiner::Sup, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, OperatorError::NegativeZerothOrder { .. }));

        assert!(BellmanOperator::new(vec![], Combiner::Inf, 1.0, 2.0).is_err());
    }

    #[test]
    fn bellman_structure_constants() {
        let controls = vec![
            Control::new(SymMatrix::diag(&[1.0, 2.0]), vec![0.3, 0.4], 0.2, Forcing::Zero),
            Control::new(
                SymMatrix::diag(&[2.0, 1.0]),
                vec![0.0, -0.1],
                0.7,
                Forcing::Affine { value: 1.0, rate: 2.0 },
            ),
        ];
        let f = BellmanOperator::new(controls, Combiner::Inf, 1.0, 2.0).unwrap();
        let s = f.structure();
        assert!((s.gamma - 0.5).abs() < 1e-15);
        assert_eq!(f.omega(1.0, 2.0), 1.4);
        assert_eq!(f.omega(1.0, 0.0), 0.0);
        assert_eq!(f.sigma2(0.1), 0.2);
        assert!(!f.is_time_independent());
    }

    #[test]
    fn linear_constants_from_spectrum() {
        let a = SymMatrix::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]]).unwrap();
        let f = LinearOperator::new(a, vec![0.0, 0.0], 0.0, Forcing::Zero).unwrap();
        let s = f.structure();
        assert!((s.lambda - 1.0).abs() < 1e-14 && (s.big_lambda - 2.0).abs() < 1e-14);
        let bad = SymMatrix::diag(&[1.0, -1.0]);
        assert!(LinearOperator::new(bad, vec![0.0, 0.0], 0.0, Forcing::Zero).is_err());
    }
}
