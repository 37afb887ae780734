//! Run configuration: a TOML file with one level of sections.
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! name = "P2_pucci_1d"
//!
//! [grid]
//! nodes = [63]
//!
//! [time]
//! steps = [0.1, 0.05, 0.025, 0.0125]
//! horizon = 1.0
//!
//! [diagnostics]
//! checks = ["first_step", "increments", "lipschitz"]
//!
//! [output]
//! dir = "out"
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rothe_core::diagnostics::{manufactured_problem, TestProblem, PROBLEM_NAMES};
use rothe_core::operators::{EllipticOperator, Extremal, Forcing, PucciOperator};
use rothe_core::rothe::geometric_steps;
use rothe_core::{DiscretizationMode, Grid, RotheConfig, Scheme, SolverChoice, StencilFrame, StepConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Name of the problem that takes its coefficients from the `[problem]` section.
pub const CUSTOM_PUCCI: &str = "custom_pucci";

pub const CHECK_NAMES: [&str; 7] = [
    "first_step",
    "increments",
    "lipschitz",
    "gronwall",
    "sandwich",
    "convolution",
    "touch",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A catalog problem, or `custom_pucci` with the coefficients below
/// (`u_t + P(D^2u) + gamma|Du| + c u + a (1 + rate t) prod sin(pi x_i) = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    #[serde(default = "default_extremal")]
    pub extremal: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "two")]
    pub big_lambda: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub zeroth_order: f64,
    #[serde(default)]
    pub forcing_amplitude: f64,
    #[serde(default)]
    pub forcing_rate: f64,
}

fn default_extremal() -> String {
    "plus".into()
}
fn default_dim() -> usize {
    1
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Interior nodes per axis; the problem's default grid when absent.
    pub nodes: Option<Vec<usize>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// `monotone` (default) or `centered`.
    pub mode: String,
    /// `axis`, `narrow` (default) or `wide`.
    pub frames: String,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nodes: None,
            lower: None,
            upper: None,
            mode: default_mode(),
            frames: default_frames(),
        }
    }
}

fn default_mode() -> String {
    "monotone".into()
}
fn default_frames() -> String {
    "narrow".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub scale_tolerance_with_h: bool,
    /// `auto`, `newton`, `policy_iteration` or `pseudo_time`.
    pub method: String,
    pub max_newton_iters: usize,
    pub max_policy_iters: usize,
    pub max_pseudo_time_iters: usize,
    pub damping: f64,
    pub pseudo_time_scale: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = StepConfig::default();
        Self {
            tolerance: d.tolerance,
            scale_tolerance_with_h: d.scale_tolerance_with_h,
            method: "auto".into(),
            max_newton_iters: d.max_newton_iters,
            max_policy_iters: d.max_policy_iters,
            max_pseudo_time_iters: d.max_pseudo_time_iters,
            damping: d.damping,
            pseudo_time_scale: d.pseudo_time_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Ladder of time steps, strictly decreasing; the problem's default when absent.
    pub steps: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    /// Snapshot and comparison times; `T/4, T/2, T` when absent.
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub checks: Vec<String>,
    /// Bound on `max / min` of first-step ratios and Lipschitz constants.
    pub stability_limit: f64,
    /// Ladder level whose steps the sandwich check samples.
    pub sandwich_level: usize,
    pub sandwich_samples: usize,
    pub convolution_eps: f64,
    pub convolution_samples: usize,
    pub gronwall_instances: usize,
    pub touch_trials: usize,
    /// Multiplies the touch-test candidate; 2 gives the corrupted control.
    pub candidate_scale: f64,
    pub touch_pass_fraction: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            checks: CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
            stability_limit: 4.0,
            sandwich_level: 1,
            sandwich_samples: 5,
            convolution_eps: 0.1,
            convolution_samples: 20,
            gronwall_instances: 200,
            touch_trials: 200,
            candidate_scale: 1.0,
            touch_pass_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Keys that would describe nonzero initial or boundary data; the solver
/// only supports `u(., 0) = 0` and `u = 0` on the boundary.
const UNSUPPORTED_DATA_KEYS: [&str; 4] = ["initial", "initial_data", "boundary", "boundary_data"];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: toml::Table = text.parse()?;
        for (section, value) in raw.iter() {
            let nested = value.as_table().map(|t| t.keys().cloned().collect()).unwrap_or_default();
            for key in std::iter::once(section.clone()).chain::<Vec<String>>(nested) {
                if UNSUPPORTED_DATA_KEYS.contains(&key.as_str()) {
                    return invalid(format!(
                        "key {key:?}: only zero initial and boundary data are supported"
                    ));
                }
            }
        }
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// A config for a catalog problem with every other field at its default.
    pub fn for_problem(name: &str) -> Self {
        Self {
            seed: 0,
            problem: ProblemSection {
                name: name.to_string(),
                extremal: default_extremal(),
                dim: 1,
                lambda: 1.0,
                big_lambda: 2.0,
                gamma: 0.0,
                zeroth_order: 0.0,
                forcing_amplitude: 0.0,
                forcing_rate: 0.0,
            },
            grid: GridSection::default(),
            solver: SolverSection::default(),
            time: TimeSection::default(),
            diagnostics: DiagnosticsSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Replaces the ladder by `levels` halvings of its first step.
    pub fn with_levels(mut self, levels: usize) -> Result<Self, ConfigError> {
        if levels == 0 {
            return invalid("--levels must be at least 1");
        }
        let h0 = self.steps()?[0];
        self.time.steps = Some(geometric_steps(h0, levels));
        Ok(self)
    }

    /// Checks every numeric field against the solver's preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let problem = self.problem()?;
        self.scheme_for(&problem)?;
        self.step_config()?;
        let steps = self.steps()?;
        if steps.is_empty() {
            return invalid("time.steps is empty");
        }
        for &h in &steps {
            if !(h > 0.0 && h <= 1.0) {
                return invalid(format!("time step h = {h} outside (0, 1]"));
            }
        }
        if steps.windows(2).any(|w| !(w[1] < w[0])) {
            return invalid("time.steps must be strictly decreasing");
        }
        let horizon = self.horizon()?;
        for t in self.snapshot_times()? {
            if !(0.0..=horizon).contains(&t) {
                return invalid(format!("snapshot time {t} outside [0, {horizon}]"));
            }
        }
        let d = &self.diagnostics;
        for c in &d.checks {
            if !CHECK_NAMES.contains(&c.as_str()) {
                return invalid(format!("unknown check {c:?}; expected one of {CHECK_NAMES:?}"));
            }
        }
        let positive = [
            ("stability_limit", d.stability_limit),
            ("convolution_eps", d.convolution_eps),
            ("candidate_scale", d.candidate_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("diagnostics.{name} must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&d.touch_pass_fraction) {
            return invalid("diagnostics.touch_pass_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<TestProblem, ConfigError> {
        let p = &self.problem;
        let mut problem = if p.name == CUSTOM_PUCCI {
            let extremal = match p.extremal.as_str() {
                "plus" => Extremal::Plus,
                "minus" => Extremal::Minus,
                other => return invalid(format!("problem.extremal {other:?}: expected plus or minus")),
            };
            if !(1..=2).contains(&p.dim) {
                return invalid(format!("problem.dim = {} unsupported (1 or 2)", p.dim));
            }
            let forcing = if p.forcing_amplitude == 0.0 {
                Forcing::Zero
            } else {
                Forcing::SineProduct {
                    amplitude: p.forcing_amplitude,
                    rate: p.forcing_rate,
                }
            };
            let op = PucciOperator::new(extremal, p.dim, p.lambda, p.big_lambda, p.gamma, p.zeroth_order, forcing)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let grid = if p.dim == 1 {
                Grid::interval(0.0, 1.0, 63)
            } else {
                Grid::rectangle([0.0, 0.0], [1.0, 1.0], [15, 15])
            }
            .expect("valid default grid");
            TestProblem {
                name: CUSTOM_PUCCI,
                description: "Pucci operator with coefficients from the config",
                operator: Arc::new(op) as Arc<dyn EllipticOperator>,
                exact: None,
                grid,
                horizon: 1.0,
                steps: vec![0.1, 0.05, 0.025, 0.0125],
            }
        } else {
            manufactured_problem(&p.name).map_err(|_| {
                ConfigError::Invalid(format!(
                    "unknown problem {:?}; expected {CUSTOM_PUCCI} or one of {PROBLEM_NAMES:?}",
                    p.name
                ))
            })?
        };
        if let Some(grid) = self.grid_override(problem.operator.dim())? {
            problem.grid = grid;
        }
        Ok(problem)
    }

    fn grid_override(&self, dim: usize) -> Result<Option<Grid>, ConfigError> {
        let g = &self.grid;
        if g.nodes.is_none() && g.lower.is_none() && g.upper.is_none() {
            return Ok(None);
        }
        let nodes = g.nodes.clone().unwrap_or_else(|| vec![63; dim]);
        let lower = g.lower.clone().unwrap_or_else(|| vec![0.0; dim]);
        let upper = g.upper.clone().unwrap_or_else(|| vec![1.0; dim]);
        if nodes.len() != dim || lower.len() != dim || upper.len() != dim {
            return invalid(format!("grid section must give {dim} value(s) per field"));
        }
        Grid::new(&lower, &upper, &nodes)
            .map(Some)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn scheme_for(&self, problem: &TestProblem) -> Result<Scheme, ConfigError> {
        let dim = problem.grid.dim();
        let frames = match self.grid.frames.as_str() {
            "axis" => StencilFrame::axis(dim),
            "narrow" => StencilFrame::narrow(dim),
            "wide" => StencilFrame::wide(dim),
            other => return invalid(format!("grid.frames {other:?}: expected axis, narrow or wide")),
        };
        let mode = match self.grid.mode.as_str() {
            "monotone" => DiscretizationMode::Monotone,
            "centered" => DiscretizationMode::Centered,
            other => return invalid(format!("grid.mode {other:?}: expected monotone or centered")),
        };
        Scheme::new(problem.grid, frames, mode).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn step_config(&self) -> Result<StepConfig, ConfigError> {
        let s = &self.solver;
        let method = match s.method.as_str() {
            "auto" => SolverChoice::Auto,
            "newton" => SolverChoice::Newton,
            "policy_iteration" => SolverChoice::PolicyIteration,
            "pseudo_time" => SolverChoice::PseudoTime,
            other => return invalid(format!("solver.method {other:?} unknown")),
        };
        let cfg = StepConfig {
            tolerance: s.tolerance,
            scale_tolerance_with_h: s.scale_tolerance_with_h,
            max_newton_iters: s.max_newton_iters,
            max_policy_iters: s.max_policy_iters,
            max_pseudo_time_iters: s.max_pseudo_time_iters,
            damping: s.damping,
            pseudo_time_scale: s.pseudo_time_scale,
            method,
            ..StepConfig::default()
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn rothe_config(&self) -> Result<RotheConfig, ConfigError> {
        Ok(RotheConfig {
            step: self.step_config()?,
            thin_every: None,
        })
    }

    pub fn steps(&self) -> Result<Vec<f64>, ConfigError> {
        match &self.time.steps {
            Some(s) => Ok(s.clone()),
            None => Ok(self.problem()?.steps),
        }
    }

    pub fn horizon(&self) -> Result<f64, ConfigError> {
        let t = match self.time.horizon {
            Some(t) => t,
            None => self.problem()?.horizon,
        };
        if !(t > 0.0 && t.is_finite()) {
            return invalid(format!("horizon T = {t} must be positive"));
        }
        Ok(t)
    }

    pub fn snapshot_times(&self) -> Result<Vec<f64>, ConfigError> {
        match &self.time.snapshot_times {
            Some(ts) => Ok(ts.clone()),
            None => {
                let t = self.horizon()?;
                Ok(vec![0.25 * t, 0.5 * t, t])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str("[problem]\nname = \"P1_linear_1d\"\n").unwrap();
        assert_eq!(cfg.steps().unwrap(), vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(cfg.snapshot_times().unwrap(), vec![0.25, 0.5, 1.0]);
        assert_eq!(cfg.diagnostics.checks.len(), CHECK_NAMES.len());
        assert_eq!(cfg, RunConfig::for_problem("P1_linear_1d"));
    }

    #[test]
    fn round_trip_is_identity() {
        let mut cfg = RunConfig::for_problem(CUSTOM_PUCCI);
        cfg.seed = 42;
        cfg.grid.nodes = Some(vec![31]);
        cfg.time.steps = Some(vec![0.1, 0.05 + 1e-17, 0.01]);
        cfg.diagnostics.candidate_scale = 0.1 + 0.2;
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string(), text);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            "[problem]\nname = \"P1_linear_1d\"\n[time]\nsteps = [2.0]\n",
            "[problem]\nname = \"P1_linear_1d\"\n[time]\nsteps = [0.05, 0.1]\n",
            "[problem]\nname = \"nope\"\n",
            "[problem]\nname = \"P1_linear_1d\"\n[solver]\ntolerance = -1.0\n",
            "[problem]\nname = \"custom_pucci\"\nlambda = 3.0\nbig_lambda = 2.0\n",
            "[problem]\nname = \"P1_linear_1d\"\ninitial_data = 1.0\n",
            "[problem]\nname = \"P1_linear_1d\"\n[grid]\nnodes = [5, 5]\n",
            "[problem]\nname = \"P1_linear_1d\"\n[diagnostics]\nchecks = [\"bogus\"]\n",
        ];
        for text in bad {
            assert!(RunConfig::from_toml_str(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn levels_override_halves_first_step() {
        let cfg = RunConfig::for_problem("zero").with_levels(3).unwrap();
        assert_eq!(cfg.steps().unwrap(), vec![0.1, 0.05, 0.025]);
        assert!(RunConfig::for_problem("zero").with_levels(0).is_err());
    }
}
