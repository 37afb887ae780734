use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Check, DiagnosticsReport};
use crate::grid::{centered_gradient, discrete_hessian, GridFunction};
use crate::linalg::SymMatrix;
use crate::operators::EllipticOperator;
use crate::rothe::RotheSequence;

/// Which half of the viscosity definition a trial probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `phi_t + F(phi) >= eps0`; `phi` touches the candidate from above.
    Sub,
    /// `phi_t + F(phi) <= -eps0`; `phi` touches from below.
    Super,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchConfig {
    /// Qualifying trials wanted.
    pub trials: usize,
    /// Cap on drawn trials, qualifying or not.
    pub max_attempts: usize,
    pub eps0: f64,
    /// Bounds on the random parts of the quadratic's coefficients; the
    /// gradient part is in units of the mesh spacing.
    pub q_range: f64,
    pub b_range: f64,
    pub beta_range: f64,
    /// Neighborhood half-width in mesh points (2 gives 5 points per axis).
    pub half_width: usize,
    /// Multiplies the candidate; 1 tests the computed interpolant itself.
    pub candidate_scale: f64,
    pub seed: u64,
    pub pass_fraction: f64,
}

impl Default for TouchConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            max_attempts: 20_000,
            eps0: 0.1,
            q_range: 2.0,
            b_range: 1.0,
            beta_range: 1.0,
            half_width: 2,
            candidate_scale: 1.0,
            seed: 0,
            pass_fraction: 0.95,
        }
    }
}

/// A space-time quadratic
/// `phi(x, t) = b.(x - x0) + (x - x0)^T Q (x - x0) / 2 + beta (t - t0)`
/// centered at node `node` and time level `level`; the constant is chosen by
/// the touching step.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchTrial {
    pub node: usize,
    pub level: usize,
    pub b: [f64; 2],
    pub q: SymMatrix,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: TouchTrial,
    pub direction: Option<Direction>,
    /// Smallest `|phi_t + F(phi)|` over the neighborhood, signed.
    pub residual_extreme: f64,
    /// Touching point as (node, level).
    pub touch: (usize, usize),
    pub interior: bool,
    /// Gap between the touching level and the best inner-set value; a
    /// genuine solution keeps it positive.
    pub gap: f64,
    /// Candidate's discrete step residual at the touching point.
    pub step_residual: f64,
    pub passed: bool,
}

fn candidate(seq: &RotheSequence, level: usize, scale: f64) -> GridFunction {
    let z = seq.iterate(level).expect("touch test needs all iterates retained");
    if scale == 1.0 {
        z.clone()
    } else {
        z.scaled(scale)
    }
}

/// Nodes and levels around the trial center; the inner set is the part
/// where the discrete step equation only sees neighborhood values.
fn neighborhood(seq: &RotheSequence, node: usize, w: i32) -> Option<Vec<(usize, [i32; 2])>> {
    let g = seq.scheme.grid;
    let ys: Vec<i32> = if g.dim() == 1 { vec![0] } else { (-w..=w).collect() };
    let mut out = Vec::new();
    for &oy in &ys {
        for ox in -w..=w {
            out.push((g.neighbor(node, [ox, oy])?, [ox, oy]));
        }
    }
    Some(out)
}

/// Runs one trial against the candidate `scale * U_h`.
pub fn evaluate_trial(
    op: &dyn EllipticOperator,
    seq: &RotheSequence,
    trial: &TouchTrial,
    cfg: &TouchConfig,
) -> Option<TrialOutcome> {
    let g = seq.scheme.grid;
    let d = g.dim();
    let w = cfg.half_width as i32;
    let nbhd = neighborhood(seq, trial.node, w)?;
    let m = trial.level;
    if m == 0 || m + 1 > seq.steps() {
        return None;
    }
    let x0 = g.point(trial.node);
    let t0 = seq.time(m);
    let levels = [m - 1, m, m + 1];
    let frames: Vec<GridFunction> = levels.iter().map(|&l| candidate(seq, l, cfg.candidate_scale)).collect();

    let phi = |k: usize, t: f64| -> (f64, Vec<f64>) {
        let x = g.point(k);
        let dxv = [x[0] - x0[0], x[1] - x0[1]];
        let qx = trial.q.apply(&dxv[..d]);
        let value = (0..d).map(|i| trial.b[i] * dxv[i] + 0.5 * qx[i] * dxv[i]).sum::<f64>()
            + trial.beta * (t - t0);
        let grad = (0..d).map(|i| trial.b[i] + qx[i]).collect();
        (value, grad)
    };

    // psi = U - phi without constant, over the space-time neighborhood.
    let mut pts = Vec::with_capacity(nbhd.len() * 3);
    for (li, &l) in levels.iter().enumerate() {
        let t = seq.time(l);
        for &(k, off) in &nbhd {
            let (pv, grad) = phi(k, t);
            let inner = li > 0 && off.iter().take(d).all(|o| o.abs() < w);
            pts.push((k, li, t, frames[li].get(k) - pv, pv, grad, inner));
        }
    }
    let max_psi = pts.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
    let min_psi = pts.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);

    let residuals = |a: f64| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &pts {
            let x = g.point(p.0);
            let r = trial.beta + op.evaluate(&trial.q, &p.5, p.4 + a, &x[..d], p.2);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    };
    let (sub_lo, _) = residuals(max_psi);
    let (_, sup_hi) = residuals(min_psi);
    let (direction, a, extreme) = if sub_lo >= cfg.eps0 {
        (Some(Direction::Sub), max_psi, sub_lo)
    } else if sup_hi <= -cfg.eps0 {
        (Some(Direction::Super), min_psi, sup_hi)
    } else {
        (None, max_psi, sub_lo.min(-sup_hi))
    };

    let Some(dir) = direction else {
        return Some(TrialOutcome {
            trial: trial.clone(),
            direction: None,
            residual_extreme: extreme,
            touch: (trial.node, m),
            interior: false,
            gap: 0.0,
            step_residual: 0.0,
            passed: true,
        });
    };

    // Touching point: extremum of psi; ties resolved toward the inner set.
    let key = |p: &(usize, usize, f64, f64, f64, Vec<f64>, bool)| match dir {
        Direction::Sub => p.3,
        Direction::Super => -p.3,
    };
    let best_inner = pts
        .iter()
        .filter(|p| p.6)
        .map(key)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = match dir {
        Direction::Sub => a,
        Direction::Super => -a,
    };
    let gap = best - best_inner;
    let touch = pts
        .iter()
        .filter(|p| key(p) == best)
        .max_by_key(|p| p.6)
        .expect("neighborhood is nonempty");
    let interior = gap <= 0.0;

    // Step residual of the candidate at the touching point.
    let (tk, tl) = (touch.0, levels[touch.1]);
    let step_residual = if tl >= 1 {
        let z = &frames[touch.1];
        let zp = if touch.1 >= 1 {
            frames[touch.1 - 1].clone()
        } else {
            candidate(seq, tl - 1, cfg.candidate_scale)
        };
        let x = g.point(tk);
        let m2 = discrete_hessian(z, tk);
        let p = centered_gradient(z, tk);
        (z.get(tk) - zp.get(tk)) / seq.h + op.evaluate(&m2, &p, z.get(tk), &x[..d], seq.time(tl))
    } else {
        0.0
    };

    Some(TrialOutcome {
        trial: trial.clone(),
        direction: Some(dir),
        residual_extreme: extreme,
        touch: (tk, tl),
        interior,
        gap,
        step_residual,
        passed: !interior,
    })
}

fn draw_trial(seq: &RotheSequence, cfg: &TouchConfig, index: u64, nodes: &[usize]) -> TouchTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let g = seq.scheme.grid;
    let d = g.dim();
    let node = nodes[rng.gen_range(0..nodes.len())];
    let level = rng.gen_range(1..seq.steps());
    let z = candidate(seq, level, cfg.candidate_scale);
    let jet_q = discrete_hessian(&z, node);
    let jet_b = centered_gradient(&z, node);
    let zp = candidate(seq, level - 1, cfg.candidate_scale);
    let zn = candidate(seq, level + 1, cfg.candidate_scale);
    let jet_t = (zn.get(node) - zp.get(node)) / (2.0 * seq.h);

    // Entries in [-q/2, q/2] keep the spectral norm of the perturbation <= q.
    let mut q = SymMatrix::zeros(d);
    let half = if d == 1 { cfg.q_range } else { 0.5 * cfg.q_range };
    for i in 0..d {
        for j in i..d {
            q.set(i, j, rng.gen_range(-half..=half));
        }
    }
    let mut bh = [0.0; 2];
    for v in bh.iter_mut().take(d) {
        *v = rng.gen_range(-cfg.b_range..=cfg.b_range);
    }
    let norm = (bh[0] * bh[0] + bh[1] * bh[1]).sqrt();
    if norm > cfg.b_range {
        bh[0] *= cfg.b_range / norm;
        bh[1] *= cfg.b_range / norm;
    }
    // The gradient perturbation is measured in mesh units: a unit slope
    // would dominate the curvature over a few cells and always push the
    // extremum to the edge of the neighborhood.
    for (axis, v) in bh.iter_mut().enumerate().take(d) {
        *v *= g.spacing(axis);
    }
    let beta = jet_t + rng.gen_range(-cfg.beta_range..=cfg.beta_range);
    let mut b = [0.0; 2];
    for i in 0..d {
        b[i] = jet_b[i] + bh[i];
    }
    TouchTrial {
        node,
        level,
        b,
        q: jet_q.add(&q),
        beta,
    }
}

/// Random touching trials against the candidate `scale * U_h` of a solved
/// sequence (normally the finest ladder level).
///
/// A trial qualifies when the shifted quadratic's residual keeps a sign with
/// margin `eps0` on the whole neighborhood. For a solution of the monotone
/// scheme, touching then cannot happen in the inner set (points whose
/// step equation involves only neighborhood values), so a qualifying trial
/// passes when the touching point lies outside it.
pub fn viscosity_touch_test(
    op: &dyn EllipticOperator,
    seq: &RotheSequence,
    cfg: &TouchConfig,
) -> (DiagnosticsReport, Vec<TrialOutcome>) {
    let g = seq.scheme.grid;
    let w = cfg.half_width as i32;
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&k| neighborhood(seq, k, w).is_some())
        .collect();
    let mut outcomes = Vec::new();
    let mut attempts = 0usize;
    if !nodes.is_empty() && seq.steps() >= 2 {
        let batch = 256;
        while attempts < cfg.max_attempts
            && outcomes.iter().filter(|o: &&TrialOutcome| o.direction.is_some()).count() < cfg.trials
        {
            let end = (attempts + batch).min(cfg.max_attempts);
            let mut got: Vec<TrialOutcome> = (attempts..end)
                .into_par_iter()
                .filter_map(|i| {
                    let trial = draw_trial(seq, cfg, i as u64, &nodes);
                    evaluate_trial(op, seq, &trial, cfg)
                })
                .collect();
            outcomes.append(&mut got);
            attempts = end;
        }
    }
    let mut qualifying: Vec<TrialOutcome> = Vec::new();
    let mut discarded = 0usize;
    for o in outcomes {
        if qualifying.len() == cfg.trials {
            break;
        }
        if o.direction.is_some() {
            qualifying.push(o);
        } else {
            discarded += 1;
        }
    }
    let passed = qualifying.iter().filter(|o| o.passed).count();
    let fraction = if qualifying.is_empty() {
        0.0
    } else {
        passed as f64 / qualifying.len() as f64
    };
    let mut r = DiagnosticsReport::new();
    r.measure("touch_discarded", discarded as f64);
    r.measure("touch_failures", (qualifying.len() - passed) as f64);
    r.check(Check::at_least("touch_qualifying", qualifying.len() as f64, cfg.trials as f64, 0.0));
    r.check(
        Check::at_least("touch_pass_fraction", fraction, cfg.pass_fraction, 0.0).with_detail(format!(
            "{passed} of {} qualifying trials passed; {discarded} discarded; candidate scale {}",
            qualifying.len(),
            cfg.candidate_scale
        )),
    );
    (r, qualifying)
}
