use super::{Check, DiagnosticsReport};
use crate::grid::{
    backward_difference, centered_gradient, directional_second_difference, discrete_hessian,
    forward_difference, GridFunction,
};
use crate::operators::{pucci_minus, pucci_plus, EllipticOperator};

/// Outcome of the pointwise sandwich evaluation at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichSummary {
    /// Smallest margin over nodes and both inequalities.
    pub worst_margin: f64,
    pub worst_node: usize,
    /// `"lower"` or `"upper"`.
    pub worst_side: &'static str,
    /// Largest over nodes of the smaller of the two absolute margins: the gap
    /// left by the tighter inequality.
    pub defect: f64,
    /// Consistency slack `C_s * dx` used in the tolerance.
    pub slack: f64,
    pub slack_constant: f64,
    pub tolerance: f64,
    /// Nodes where the one-sided slopes change sign (kinks of the iterate).
    pub kink_nodes: usize,
}

impl SandwichSummary {
    pub fn passed(&self) -> bool {
        self.worst_margin >= -self.tolerance
    }
}

/// Largest centered fourth difference along the axes.
pub fn fourth_difference_max(u: &GridFunction) -> f64 {
    let g = u.grid();
    let mut worst: f64 = 0.0;
    for k in 0..g.len() {
        for axis in 0..g.dim() {
            let mut e = [0i32; 2];
            let dx = g.spacing(axis);
            e[axis] = 1;
            let e2 = [2 * e[0], 2 * e[1]];
            let v = (u.at_offset(k, e2) - 4.0 * u.at_offset(k, e) + 6.0 * u.get(k)
                - 4.0 * u.at_offset(k, [-e[0], -e[1]])
                + u.at_offset(k, [-e2[0], -e2[1]]))
                / dx.powi(4);
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Evaluates, at every interior node, both sides of
/// `P-(D^2z) - g|Dz| - w((-z)+) + z/h + f <= z_n/h <= P+(D^2z) + g|Dz| + w(z+) + z/h + f`
/// with `z = z_{n+1}`, discrete derivatives of `z`, and `f = F(0,0,0,x,t)`.
///
/// The tolerance is `C_s dx + solver_tolerance (1 + 1/h)`, where `C_s dx`
/// bounds the gap between the monotone scheme and centered derivatives.
pub fn pucci_sandwich_check(
    op: &dyn EllipticOperator,
    z_n: &GridFunction,
    z_next: &GridFunction,
    h: f64,
    t: f64,
    radius: f64,
    solver_tolerance: f64,
) -> (DiagnosticsReport, SandwichSummary) {
    let g = *z_next.grid();
    let d = g.dim();
    let s = op.structure();
    let dx = g.max_spacing();

    let mut max_second: f64 = 0.0;
    let mut kinks = 0;
    for k in 0..g.len() {
        for axis in 0..d {
            let mut e = [0; 2];
            e[axis] = 1;
            max_second = max_second.max(directional_second_difference(z_next, k, e).abs());
            let (b, f) = (backward_difference(z_next, k, axis), forward_difference(z_next, k, axis));
            if b * f < 0.0 {
                kinks += 1;
            }
        }
    }
    // Upwind vs centered gradient differs by at most dx |s| / 2 per axis;
    // in 2D the diagonal second differences differ from the centered Hessian
    // by O(dx^2 |D^4 z|).
    let mut slack = (d as f64).sqrt() * s.gamma * 0.5 * dx * max_second;
    if d == 2 {
        slack += d as f64 * s.big_lambda / 6.0 * dx * dx * fourth_difference_max(z_next);
    }
    let tolerance = slack + solver_tolerance * (1.0 + 1.0 / h);

    let mut worst = f64::INFINITY;
    let mut worst_node = 0;
    let mut worst_side = "upper";
    let mut defect: f64 = 0.0;
    for k in 0..g.len() {
        let x = g.point(k);
        let x = &x[..d];
        let m = discrete_hessian(z_next, k);
        let p = centered_gradient(z_next, k);
        let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let z = z_next.get(k);
        let f = op.source(x, t);
        let lower = pucci_minus(&m, s.lambda, s.big_lambda) - s.gamma * pn - op.omega(radius, (-z).max(0.0))
            + z / h
            + f;
        let upper = pucci_plus(&m, s.lambda, s.big_lambda) + s.gamma * pn + op.omega(radius, z.max(0.0))
            + z / h
            + f;
        let mid = z_n.get(k) / h;
        let (ml, mu) = (mid - lower, upper - mid);
        if ml < worst {
            worst = ml;
            worst_node = k;
            worst_side = "lower";
        }
        if mu < worst {
            worst = mu;
            worst_node = k;
            worst_side = "upper";
        }
        defect = defect.max(ml.abs().min(mu.abs()));
    }
    let summary = SandwichSummary {
        worst_margin: worst,
        worst_node,
        worst_side,
        defect,
        slack,
        slack_constant: slack / dx,
        tolerance,
        kink_nodes: kinks,
    };
    let mut r = DiagnosticsReport::new();
    r.check(
        Check::at_least("sandwich", worst, 0.0, tolerance).with_detail(format!(
            "worst {worst_side} at node {worst_node}; C_s = {:.6e}; kink nodes {kinks}",
            summary.slack_constant
        )),
    );
    r.measure("sandwich_defect", defect);
    (r, summary)
}
