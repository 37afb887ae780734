//! The Rothe time-discretization loop, its piecewise-linear interpolant and
//! refinement ladders over the time step.

use rayon::prelude::*;

use crate::error::RotheError;
use crate::grid::{GridFunction, Scheme};
use crate::operators::EllipticOperator;
use crate::step_solver::{solve_step, StepConfig, StepSolveReport};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RotheConfig {
    pub step: StepConfig,
    /// Keep only `z_n` with `n % k` in `{0, 1}` (plus the last two) when set.
    pub thin_every: Option<usize>,
}

/// Iterates `z_0 = 0, z_1, ..., z_N` of the implicit scheme with step `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotheSequence {
    pub h: f64,
    pub horizon: f64,
    /// Time of `iterates[0]`; zero for a run started from rest.
    pub t0: f64,
    pub scheme: Scheme,
    /// `None` where thinning dropped an iterate.
    pub iterates: Vec<Option<GridFunction>>,
    pub reports: Vec<StepSolveReport>,
    /// `||z_{n+1} - z_n||_inf` for every step, retained even when thinned.
    pub increments: Vec<f64>,
}

impl RotheSequence {
    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    pub fn iterate(&self, n: usize) -> Result<&GridFunction, RotheError> {
        self.iterates
            .get(n)
            .and_then(Option::as_ref)
            .ok_or(RotheError::IterateDropped(n))
    }

    /// Time level of iterate `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.h
    }

    /// Largest residual tolerance used by any step.
    pub fn max_tolerance(&self) -> f64 {
        self.reports.iter().fold(0.0, |m, r| m.max(r.tolerance))
    }

    /// `U_h(t)`: linear in `t` between consecutive iterates, exact at mesh points.
    pub fn interpolate(&self, t: f64) -> Result<GridFunction, RotheError> {
        let span = self.horizon - self.t0;
        let s = t - self.t0;
        if !(s >= 0.0 && s <= span * (1.0 + 1e-12)) || self.steps() == 0 {
            return Err(RotheError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let n = self.steps();
        let mut m = ((s / self.h).floor() as usize).min(n - 1);
        if s < m as f64 * self.h && m > 0 {
            m -= 1;
        }
        if s == m as f64 * self.h {
            return Ok(self.iterate(m)?.clone());
        }
        if s == (m + 1) as f64 * self.h {
            return Ok(self.iterate(m + 1)?.clone());
        }
        let a = ((m + 1) as f64 * self.h - s) / self.h;
        let b = (s - m as f64 * self.h) / self.h;
        Ok(self.iterate(m)?.lincomb(a, self.iterate(m + 1)?, b))
    }
}

fn keep(n: usize, total: usize, thin: Option<usize>) -> bool {
    match thin {
        None | Some(0) | Some(1) => true,
        Some(k) => n % k <= 1 || n + 2 >= total,
    }
}

/// Runs `N = ceil(T / h)` implicit steps from `z_0 = 0`.
pub fn run_rothe(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    h: f64,
    horizon: f64,
    cfg: &RotheConfig,
) -> Result<RotheSequence, RotheError> {
    run_rothe_from(op, scheme, GridFunction::zeros(scheme.grid), 0.0, h, horizon, cfg)
}

/// Number of steps needed to reach `horizon` from `t0`, tolerant of rounding
/// in `(horizon - t0) / h`.
pub fn step_count(span: f64, h: f64) -> usize {
    let q = span / h;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        q.ceil() as usize
    }
}

/// Runs the implicit steps from an arbitrary starting iterate at time `t0`;
/// step `n` is solved at time `t0 + (n + 1) h`.
pub fn run_rothe_from(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    start: GridFunction,
    t0: f64,
    h: f64,
    horizon: f64,
    cfg: &RotheConfig,
) -> Result<RotheSequence, RotheError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(RotheError::BadStep(h));
    }
    if !(horizon > t0 && horizon.is_finite()) {
        return Err(RotheError::BadHorizon(horizon));
    }
    let total = step_count(horizon - t0, h);
    let mut seq = RotheSequence {
        h,
        horizon,
        t0,
        scheme: scheme.clone(),
        iterates: Vec::with_capacity(total + 1),
        reports: Vec::with_capacity(total),
        increments: Vec::with_capacity(total),
    };
    let mut current = start;
    seq.iterates.push(Some(current.clone()));
    for n in 0..total {
        let t_next = t0 + (n + 1) as f64 * h;
        match solve_step(op, scheme, &current, h, t_next, &cfg.step, None) {
            Ok((next, report)) => {
                seq.increments.push(next.sup_distance(&current));
                seq.reports.push(report);
                // Drop the previous iterate now that its successor is known.
                if !keep(n, total + 1, cfg.thin_every) {
                    seq.iterates[n] = None;
                }
                seq.iterates.push(Some(next.clone()));
                current = next;
            }
            Err(source) => {
                return Err(RotheError::Step {
                    step: n,
                    source,
                    partial: Box::new(seq),
                })
            }
        }
    }
    Ok(seq)
}

/// `h_k = h0 * 2^-k`, `k = 0..levels`.
pub fn geometric_steps(h0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| h0 / (1u64 << k) as f64).collect()
}

/// Rothe sequences for a strictly decreasing list of steps on one grid.
#[derive(Debug, Clone)]
pub struct RefinementLadder {
    pub steps: Vec<f64>,
    pub horizon: f64,
    pub levels: Vec<RotheSequence>,
    /// Times at which interpolants are compared.
    pub sample_times: Vec<f64>,
}

impl RefinementLadder {
    /// Runs every level (concurrently); errors carry the failing level.
    pub fn run(
        op: &dyn EllipticOperator,
        scheme: &Scheme,
        steps: &[f64],
        horizon: f64,
        sample_times: Option<Vec<f64>>,
        cfg: &RotheConfig,
    ) -> Result<Self, RotheError> {
        if steps.is_empty() || steps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(RotheError::BadLadder);
        }
        let results: Vec<Result<RotheSequence, RotheError>> = steps
            .par_iter()
            .map(|&h| run_rothe(op, scheme, h, horizon, cfg))
            .collect();
        let mut levels = Vec::with_capacity(steps.len());
        for (level, r) in results.into_iter().enumerate() {
            match r {
                Ok(seq) => levels.push(seq),
                Err(e) => {
                    return Err(RotheError::Level {
                        level,
                        source: Box::new(e),
                    })
                }
            }
        }
        let sample_times = sample_times.unwrap_or_else(|| (1..=8).map(|j| horizon * j as f64 / 8.0).collect());
        Ok(Self {
            steps: steps.to_vec(),
            horizon,
            levels,
            sample_times,
        })
    }

    /// `max_t ||U_{h_i}(t) - U_{h_j}(t)||_inf` over the sample times, for all pairs.
    pub fn cauchy_table(&self) -> Result<Vec<Vec<f64>>, RotheError> {
        let n = self.levels.len();
        let mut sampled = Vec::with_capacity(n);
        for seq in &self.levels {
            let fs = self
                .sample_times
                .iter()
                .map(|&t| seq.interpolate(t))
                .collect::<Result<Vec<_>, _>>()?;
            sampled.push(fs);
        }
        let mut table = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = sampled[i]
                    .iter()
                    .zip(&sampled[j])
                    .fold(0.0, |m: f64, (a, b)| m.max(a.sup_distance(b)));
                table[i][j] = d;
                table[j][i] = d;
            }
        }
        Ok(table)
    }

    /// Differences between consecutive levels, `d_k = table[k][k+1]`.
    pub fn successive_differences(&self) -> Result<Vec<f64>, RotheError> {
        let t = self.cauchy_table()?;
        Ok((0..self.levels.len().saturating_sub(1)).map(|k| t[k][k + 1]).collect())
    }
}
