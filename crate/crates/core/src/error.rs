use thiserror::Error;

use crate::rothe::RotheSequence;
use crate::step_solver::StepSolveReport;
use crate::grid::GridFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("matrix rows have inconsistent length")]
    NotSquare,
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("entry ({row}, {col}) lies outside the band")]
    OutsideBand { row: usize, col: usize },
    #[error("singular matrix (zero pivot at row {pivot})")]
    Singular { pivot: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: operator expects {expected}, got {got} ({what})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        what: &'static str,
    },
    #[error("invalid ellipticity constants: lambda = {lambda}, Lambda = {big_lambda}")]
    InvalidEllipticity { lambda: f64, big_lambda: f64 },
    #[error("control {index}: coefficient eigenvalues [{min}, {max}] outside [{lambda}, {big_lambda}]")]
    ControlOutOfRange {
        index: usize,
        min: f64,
        max: f64,
        lambda: f64,
        big_lambda: f64,
    },
    #[error("control {index}: zeroth-order coefficient {c} is negative")]
    NegativeZerothOrder { index: usize, c: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("axis {axis}: need at least one interior node")]
    NoInteriorNodes { axis: usize },
    #[error("axis {axis}: empty or inverted extent [{lower}, {upper}]")]
    BadExtent { axis: usize, lower: f64, upper: f64 },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("value array has length {got}, grid has {expected} interior nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid stencil frame: {0}")]
    BadFrame(String),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Failure of a single implicit step. Carries the best iterate found.
#[derive(Debug, Error, Clone)]
#[error("step solve did not converge: residual {:.3e} after {} iterations ({:?})", report.final_residual_norm, report.iterations, report.method_used)]
pub struct NonConvergence {
    pub best: GridFunction,
    pub report: StepSolveReport,
}

#[derive(Debug, Error, Clone)]
pub enum SolveError {
    #[error(transparent)]
    NonConvergence(Box<NonConvergence>),
    #[error("invalid step configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error)]
pub enum RotheError {
    #[error("mesh size h = {0} outside (0, 1]")]
    BadStep(f64),
    #[error("horizon T = {0} must be positive")]
    BadHorizon(f64),
    #[error("refinement ladder must be strictly decreasing")]
    BadLadder,
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: SolveError,
        partial: Box<RotheSequence>,
    },
    #[error("ladder level {level} failed: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<RotheError>,
    },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("iterate {0} was not retained (thinned storage)")]
    IterateDropped(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("unknown manufactured problem {0:?}")]
    UnknownProblem(String),
    #[error("negative input to the Gronwall bound at index {0}")]
    NegativeInput(usize),
    #[error("Gronwall sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Precondition(String),
}
