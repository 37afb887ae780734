use super::{Check, DiagnosticsReport};
use crate::grid::{ClosedGridFunction, Grid, GridFunction};

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn closure_points(g: &Grid) -> Vec<[f64; 2]> {
    (0..g.closure_len()).map(|c| g.closure_point(c)).collect()
}

/// `x -> max_y u(y) - |x - y|^2 / (2 eps)` over all closure nodes, boundary included.
pub fn sup_convolution_closed(u: &ClosedGridFunction, eps: f64) -> ClosedGridFunction {
    assert!(eps > 0.0, "epsilon must be positive");
    let g = *u.grid();
    let pts = closure_points(&g);
    let uv = u.values();
    let values = pts
        .iter()
        .map(|x| {
            pts.iter()
                .zip(uv)
                .map(|(y, v)| v - dist2(x, y) / (2.0 * eps))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    ClosedGridFunction::from_values(g, values).expect("closure length preserved")
}

/// `x -> min_y u(y) + |x - y|^2 / (2 eps)` over all closure nodes.
pub fn inf_convolution_closed(u: &ClosedGridFunction, eps: f64) -> ClosedGridFunction {
    assert!(eps > 0.0, "epsilon must be positive");
    let g = *u.grid();
    let pts = closure_points(&g);
    let uv = u.values();
    let values = pts
        .iter()
        .map(|x| {
            pts.iter()
                .zip(uv)
                .map(|(y, v)| v + dist2(x, y) / (2.0 * eps))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ClosedGridFunction::from_values(g, values).expect("closure length preserved")
}

/// Sup-convolution of a grid function extended by zero to the boundary.
pub fn sup_convolution(u: &GridFunction, eps: f64) -> ClosedGridFunction {
    sup_convolution_closed(&u.to_closure(), eps)
}

pub fn inf_convolution(u: &GridFunction, eps: f64) -> ClosedGridFunction {
    inf_convolution_closed(&u.to_closure(), eps)
}

fn negate(u: &ClosedGridFunction) -> ClosedGridFunction {
    ClosedGridFunction::from_values(*u.grid(), u.values().iter().map(|v| -v).collect())
        .expect("closure length preserved")
}

/// Smallest (or largest, with `sign = -1`) second difference of closure
/// values at interior nodes, along the axes and, in 2D, the diagonals.
fn extreme_second_difference(u: &ClosedGridFunction, sign: f64) -> (f64, usize) {
    let g = u.grid();
    let dirs: &[[i32; 2]] = if g.dim() == 1 {
        &[[1, 0]]
    } else {
        &[[1, 0], [0, 1], [1, 1], [1, -1]]
    };
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for k in 0..g.len() {
        for &e in dirs {
            let plus = u.at_offset(k, e).expect("interior node");
            let minus = u.at_offset(k, [-e[0], -e[1]]).expect("interior node");
            let center = u.at_offset(k, [0, 0]).expect("interior node");
            let s = sign * (plus - 2.0 * center + minus) / g.step_length_sq(e);
            if s < worst {
                worst = s;
                at = k;
            }
        }
    }
    (sign * worst, at)
}

fn rounding_budget(u: &ClosedGridFunction, eps: f64) -> f64 {
    let g = u.grid();
    let diam2: f64 = (0..g.dim()).map(|a| (g.upper(a) - g.lower(a)).powi(2)).sum();
    let scale = u.values().iter().fold(0.0, |m: f64, v| m.max(v.abs())) + diam2 / eps;
    let dx = g.min_spacing();
    1e-13 * scale / (dx * dx)
}

/// Every second difference of `u_eps` is at least `-1/eps`.
///
/// On the grid the sup-convolution plus `|x|^2 / (2 eps)` is a maximum of
/// affine functions, so the bound holds up to rounding; the consistency
/// constant is therefore zero and only a rounding budget is allowed.
pub fn semiconvexity_check(u_eps: &ClosedGridFunction, eps: f64) -> DiagnosticsReport {
    let (min_s, at) = extreme_second_difference(u_eps, 1.0);
    let mut r = DiagnosticsReport::new();
    r.check(
        Check::at_least("semiconvexity", min_s, -1.0 / eps, rounding_budget(u_eps, eps))
            .with_detail(format!("smallest second difference at node {at}; C_s = 0")),
    );
    r
}

/// Ordering, monotonicity in `eps`, exact duality and one-sided second
/// difference bounds for `u^eps` and `u^{eps/2}`.
pub fn convolution_properties(u: &GridFunction, eps: f64) -> DiagnosticsReport {
    let uc = u.to_closure();
    let sup1 = sup_convolution_closed(&uc, eps);
    let sup2 = sup_convolution_closed(&uc, eps / 2.0);
    let inf1 = inf_convolution_closed(&uc, eps);
    let dual = negate(&sup_convolution_closed(&negate(&uc), eps));

    let min_gap = |a: &ClosedGridFunction, b: &ClosedGridFunction| {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .fold(f64::INFINITY, f64::min)
    };
    let mut r = DiagnosticsReport::new();
    r.check(Check::at_least("sup_above", min_gap(&sup1, &uc), 0.0, 0.0));
    r.check(Check::at_least("inf_below", min_gap(&uc, &inf1), 0.0, 0.0));
    r.check(Check::at_least("eps_monotone", min_gap(&sup1, &sup2), 0.0, 0.0));
    let dual_err = inf1
        .values()
        .iter()
        .zip(dual.values())
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    r.check(Check::at_most("duality", dual_err, 0.0, 0.0));
    r.merge(semiconvexity_check(&sup1, eps));
    let half = semiconvexity_check(&sup2, eps / 2.0);
    for mut c in half.checks {
        c.name = format!("{}_half_eps", c.name);
        r.check(c);
    }
    let (max_s, at) = extreme_second_difference(&inf1, -1.0);
    r.check(
        Check::at_most("semiconcavity", max_s, 1.0 / eps, rounding_budget(&inf1, eps))
            .with_detail(format!("largest second difference at node {at}")),
    );
    let dist = sup1
        .values()
        .iter()
        .zip(uc.values())
        .fold(0.0, |m: f64, (a, b)| m.max(a - b));
    r.measure("sup_distance", dist);
    r
}
