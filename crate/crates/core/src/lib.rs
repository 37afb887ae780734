//! Rothe time discretization for fully nonlinear uniformly parabolic
//! equations `u_t + F(D^2u, Du, u, x, t) = 0` with zero initial and boundary
//! data: elliptic operators, monotone grid discretizations, implicit step
//! solvers, the Rothe driver, and numerical checks of its estimates.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod rothe;
pub mod step_solver;

pub use diagnostics::{Check, DiagnosticsReport, TestProblem};
pub use error::{
    DiagnosticsError, GridError, LinalgError, NonConvergence, OperatorError, RotheError, SolveError,
};
pub use grid::{DiscretizationMode, Grid, GridFunction, Scheme, StencilFrame};
pub use linalg::SymMatrix;
pub use operators::{
    BellmanOperator, Combiner, Control, EllipticOperator, Extremal, Forcing, LinearOperator,
    PucciOperator, Structure,
};
pub use rothe::{run_rothe, RefinementLadder, RotheConfig, RotheSequence};
pub use step_solver::{solve_step, SolveMethod, SolverChoice, StepConfig, StepSolveReport};
