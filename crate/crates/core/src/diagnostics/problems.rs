use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::DiagnosticsError;
use crate::grid::Grid;
use crate::linalg::SymMatrix;
use crate::operators::{
    BellmanOperator, Combiner, Control, EllipticOperator, Extremal, Forcing, LinearOperator,
    PucciOperator,
};

pub type ExactSolution = fn(&[f64], f64) -> f64;

/// An operator with a default grid and time ladder, and optionally a known
/// exact solution of `u_t + F(D^2u, Du, u, x, t) = 0`.
#[derive(Clone)]
pub struct TestProblem {
    pub name: &'static str,
    pub description: &'static str,
    pub operator: Arc<dyn EllipticOperator>,
    pub exact: Option<ExactSolution>,
    pub grid: Grid,
    pub horizon: f64,
    pub steps: Vec<f64>,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("operator", &self.operator)
            .field("exact", &self.exact.is_some())
            .field("grid", &self.grid)
            .finish()
    }
}

pub const PROBLEM_NAMES: [&str; 6] = [
    "P1_linear_1d",
    "P2_pucci_1d",
    "P2_pucci_1d_steady",
    "P3_bellman_2d",
    "single_node",
    "zero",
];

fn p1_exact(x: &[f64], t: f64) -> f64 {
    t * (PI * x[0]).sin()
}

fn default_steps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}

fn pucci_1d(rate: f64) -> PucciOperator {
    PucciOperator::new(
        Extremal::Plus,
        1,
        1.0,
        2.0,
        0.5,
        0.5,
        Forcing::SineProduct {
            amplitude: -1.0,
            rate,
        },
    )
    .expect("valid constants")
}

fn bellman_2d() -> BellmanOperator {
    let a1 = SymMatrix::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]]).expect("symmetric");
    let a2 = SymMatrix::from_rows(&[vec![1.5, -0.5], vec![-0.5, 1.5]]).expect("symmetric");
    BellmanOperator::new(
        vec![
            Control::new(a1, vec![0.5, 0.0], 0.0, Forcing::Affine { value: -1.0, rate: 1.0 }),
            Control::new(
                a2,
                vec![0.0, -0.5],
                0.5,
                Forcing::SineProduct {
                    amplitude: -2.0,
                    rate: 1.0,
                },
            ),
        ],
        Combiner::Sup,
        1.0,
        2.0,
    )
    .expect("valid controls")
}

/// `F(M) = -M + 1` on a single interior node of `(0, 1)`, where the first
/// step is `-h / (8h + 1)` in closed form.
pub fn single_node_problem() -> TestProblem {
    TestProblem {
        name: "single_node",
        description: "F(M) = -M + 1 on (0,1) with one interior node",
        operator: Arc::new(
            LinearOperator::new(
                SymMatrix::identity(1),
                vec![0.0],
                0.0,
                Forcing::Affine { value: 1.0, rate: 0.0 },
            )
            .expect("valid"),
        ),
        exact: None,
        grid: Grid::interval(0.0, 1.0, 1).expect("valid grid"),
        horizon: 1.0,
        steps: default_steps(),
    }
}

/// Looks up a catalog problem by name (see [`PROBLEM_NAMES`]).
pub fn manufactured_problem(name: &str) -> Result<TestProblem, DiagnosticsError> {
    let unit = Grid::interval(0.0, 1.0, 63).expect("valid grid");
    let p = match name {
        "P1_linear_1d" => TestProblem {
            name: "P1_linear_1d",
            description: "u_t - u_xx + g = 0 on (0,1), exact u = t sin(pi x)",
            operator: Arc::new(
                LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::HeatManufactured { dim: 1 })
                    .expect("valid"),
            ),
            exact: Some(p1_exact),
            grid: unit,
            horizon: 1.0,
            steps: default_steps(),
        },
        "P2_pucci_1d" => TestProblem {
            name: "P2_pucci_1d",
            description: "P+ (lambda=1, Lambda=2) + 0.5|Du| + 0.5u - (1+t) sin(pi x) on (0,1)",
            operator: Arc::new(pucci_1d(1.0)),
            exact: None,
            grid: unit,
            horizon: 1.0,
            steps: default_steps(),
        },
        "P2_pucci_1d_steady" => TestProblem {
            name: "P2_pucci_1d_steady",
            description: "P+ (lambda=1, Lambda=2) + 0.5|Du| + 0.5u - sin(pi x) on (0,1), time independent",
            operator: Arc::new(pucci_1d(0.0)),
            exact: None,
            grid: unit,
            horizon: 1.0,
            steps: default_steps(),
        },
        "P3_bellman_2d" => TestProblem {
            name: "P3_bellman_2d",
            description: "sup of two anisotropic linear controls with drift on the unit square",
            operator: Arc::new(bellman_2d()),
            exact: None,
            grid: Grid::rectangle([0.0, 0.0], [1.0, 1.0], [15, 15]).expect("valid grid"),
            horizon: 1.0,
            steps: default_steps(),
        },
        "single_node" => single_node_problem(),
        "zero" => TestProblem {
            name: "zero",
            description: "u_t - u_xx = 0 with zero data; every iterate vanishes",
            operator: Arc::new(
                LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::Zero).expect("valid"),
            ),
            exact: Some(|_, _| 0.0),
            grid: Grid::interval(0.0, 1.0, 15).expect("valid grid"),
            horizon: 1.0,
            steps: default_steps(),
        },
        other => return Err(DiagnosticsError::UnknownProblem(other.to_string())),
    };
    Ok(p)
}

/// `max |u_t + F(D^2u, Du, u, x, t)|` of the exact solution at the probe
/// points, with fourth-order central differences of step `delta`.
pub fn exact_residual_probe(
    problem: &TestProblem,
    points: &[(Vec<f64>, f64)],
    delta: f64,
) -> Result<f64, DiagnosticsError> {
    let u = problem
        .exact
        .ok_or_else(|| DiagnosticsError::Precondition(format!("{} has no exact solution", problem.name)))?;
    let op = &problem.operator;
    let d = op.dim();
    let mut worst: f64 = 0.0;
    // f'(0) and f''(0) from samples at -2..2 steps.
    let first = |f: &dyn Fn(f64) -> f64| {
        (-f(2.0 * delta) + 8.0 * f(delta) - 8.0 * f(-delta) + f(-2.0 * delta)) / (12.0 * delta)
    };
    let second = |f: &dyn Fn(f64) -> f64| {
        (-f(2.0 * delta) + 16.0 * f(delta) - 30.0 * f(0.0) + 16.0 * f(-delta) - f(-2.0 * delta))
            / (12.0 * delta * delta)
    };
    for (x, t) in points {
        if x.len() != d {
            return Err(DiagnosticsError::Precondition("probe point has the wrong dimension".into()));
        }
        let shifted = |i: usize, s: f64| {
            let mut y = x.clone();
            y[i] += s;
            y
        };
        let ut = first(&|s| u(x, t + s));
        let mut m = SymMatrix::zeros(d);
        let mut p = vec![0.0; d];
        for i in 0..d {
            p[i] = first(&|s| u(&shifted(i, s), *t));
            m.set(i, i, second(&|s| u(&shifted(i, s), *t)));
            for j in i + 1..d {
                let mixed = first(&|s| {
                    let yi = shifted(i, s);
                    let dj = |r: f64| {
                        let mut y = yi.clone();
                        y[j] += r;
                        u(&y, *t)
                    };
                    first(&dj)
                });
                m.set(i, j, mixed);
            }
        }
        let r = ut + op.evaluate(&m, &p, u(x, *t), x, *t);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lookup() {
        for name in PROBLEM_NAMES {
            let p = manufactured_problem(name).unwrap();
            assert_eq!(p.name, name);
            assert_eq!(p.operator.dim(), p.grid.dim());
        }
        assert!(matches!(
            manufactured_problem("P9"),
            Err(DiagnosticsError::UnknownProblem(_))
        ));
    }

    #[test]
    fn p1_manufactured_algebra() {
        let p = manufactured_problem("P1_linear_1d").unwrap();
        let u = p.exact.unwrap();
        assert_eq!(u(&[0.3], 0.0), 0.0);
        let points: Vec<(Vec<f64>, f64)> = (1..10)
            .flat_map(|i| (1..5).map(move |k| (vec![i as f64 / 10.0], k as f64 * 0.25)))
            .collect();
        assert!(exact_residual_probe(&p, &points, 1e-3).unwrap() <= 1e-6);
    }

    #[test]
    fn steady_variant_is_time_independent() {
        let p = manufactured_problem("P2_pucci_1d_steady").unwrap();
        assert!(p.operator.is_time_independent());
        assert!(!manufactured_problem("P2_pucci_1d").unwrap().operator.is_time_independent());
    }
}
