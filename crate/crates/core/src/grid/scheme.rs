use rayon::prelude::*;

use super::stencil::{
    centered_gradient, directional_second_difference, discrete_hessian, upwind_slopes, Direction,
    StencilFrame, Upwind,
};
use super::{Grid, GridFunction, Node};
use crate::error::GridError;
use crate::operators::{Combiner, Control, EllipticOperator, OperatorForm, PucciOperator};

/// Nonzero entries of one Jacobian row as `(column, value)`.
pub type JacobianRow = Vec<(Node, f64)>;

const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscretizationMode {
    /// Frame maximization for Pucci forms, positive stencil decomposition
    /// and upwinding for linear and Bellman forms.
    #[default]
    Monotone,
    /// Centered Hessian and gradient fed into `F` (not monotone in general).
    Centered,
}

/// A grid together with the discretization choices.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub grid: Grid,
    pub frames: StencilFrame,
    pub mode: DiscretizationMode,
}

impl Scheme {
    pub fn new(grid: Grid, frames: StencilFrame, mode: DiscretizationMode) -> Result<Self, GridError> {
        frames.check_grid(&grid)?;
        Ok(Self { grid, frames, mode })
    }

    /// Narrow frames, monotone mode.
    pub fn monotone(grid: Grid) -> Self {
        Self {
            frames: StencilFrame::narrow(grid.dim()),
            grid,
            mode: DiscretizationMode::Monotone,
        }
    }
}

/// Constant-coefficient linear stencil `sum_o coeff_o z(x + o)`.
#[derive(Debug, Clone, Default)]
struct LinearStencil {
    terms: Vec<(Direction, f64)>,
}

impl LinearStencil {
    fn add(&mut self, o: Direction, v: f64) {
        if v == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|(d, _)| *d == o) {
            Some((_, c)) => *c += v,
            None => self.terms.push((o, v)),
        }
    }

    #[inline]
    fn apply(&self, z: &GridFunction, k: Node) -> f64 {
        self.terms.iter().map(|&(o, c)| c * z.at_offset(k, o)).sum()
    }

    fn center(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(o, _)| *o == [0, 0])
            .map(|(_, c)| c)
            .sum()
    }

    fn off_center_abs(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(o, _)| *o != [0, 0])
            .map(|(_, c)| c.abs())
            .sum()
    }

    fn is_monotone(&self) -> bool {
        self.terms.iter().all(|&(o, c)| o == [0, 0] || c <= 0.0)
    }
}

fn unit(axis: usize) -> Direction {
    let mut e = [0; 2];
    e[axis] = 1;
    e
}

fn neg(e: Direction) -> Direction {
    [-e[0], -e[1]]
}

/// Adds `-w * (z(x+e) - 2 z(x) + z(x-e)) / |e|^2`.
fn add_second_difference(st: &mut LinearStencil, grid: &Grid, e: Direction, w: f64) {
    let inv = w / grid.step_length_sq(e);
    st.add(e, -inv);
    st.add(neg(e), -inv);
    st.add([0, 0], 2.0 * inv);
}

/// Positive decomposition of `A` on the axes and one diagonal, with upwinded
/// drift. Returns `None` when the decomposition has a negative weight.
fn monotone_control_stencil(ctl: &Control, grid: &Grid) -> Option<LinearStencil> {
    let mut st = LinearStencil::default();
    let d = grid.dim();
    if d == 1 {
        add_second_difference(&mut st, grid, [1, 0], ctl.a.get(0, 0));
    } else {
        let (dx, dy) = (grid.spacing(0), grid.spacing(1));
        let a12 = ctl.a.get(0, 1);
        let w1 = ctl.a.get(0, 0) - a12.abs() * dx / dy;
        let w2 = ctl.a.get(1, 1) - a12.abs() * dy / dx;
        if w1 < 0.0 || w2 < 0.0 {
            return None;
        }
        add_second_difference(&mut st, grid, [1, 0], w1);
        add_second_difference(&mut st, grid, [0, 1], w2);
        if a12 != 0.0 {
            let diag = if a12 > 0.0 { [1, 1] } else { [1, -1] };
            let rho2 = dx * dx + dy * dy;
            add_second_difference(&mut st, grid, diag, a12.abs() * rho2 / (dx * dy));
        }
    }
    for axis in 0..d {
        let b = ctl.b[axis];
        let inv = b / grid.spacing(axis);
        let e = unit(axis);
        if b > 0.0 {
            st.add([0, 0], inv);
            st.add(neg(e), -inv);
        } else if b < 0.0 {
            st.add([0, 0], -inv);
            st.add(e, inv);
        }
    }
    st.add([0, 0], ctl.c);
    Some(st)
}

fn centered_control_stencil(ctl: &Control, grid: &Grid) -> LinearStencil {
    let mut st = LinearStencil::default();
    let d = grid.dim();
    for axis in 0..d {
        add_second_difference(&mut st, grid, unit(axis), ctl.a.get(axis, axis));
        let inv = ctl.b[axis] / (2.0 * grid.spacing(axis));
        st.add(unit(axis), inv);
        st.add(neg(unit(axis)), -inv);
    }
    if d == 2 {
        let w = 2.0 * ctl.a.get(0, 1) / (4.0 * grid.spacing(0) * grid.spacing(1));
        st.add([1, 1], -w);
        st.add([-1, -1], -w);
        st.add([1, -1], w);
        st.add([-1, 1], w);
    }
    st.add([0, 0], ctl.c);
    st
}

enum Kind<'a> {
    Pucci(&'a PucciOperator),
    Controls {
        controls: &'a [Control],
        combiner: Combiner,
        stencils: Vec<LinearStencil>,
        monotone: bool,
    },
    Generic,
}

/// The discrete operator `F_h` of an [`EllipticOperator`] on a [`Scheme`].
pub struct DiscreteOperator<'a> {
    op: &'a dyn EllipticOperator,
    scheme: &'a Scheme,
    kind: Kind<'a>,
}

impl std::fmt::Debug for DiscreteOperator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("operator", &self.op.name())
            .field("mode", &self.scheme.mode)
            .field("monotone", &self.is_monotone())
            .finish()
    }
}

impl<'a> DiscreteOperator<'a> {
    pub fn new(op: &'a dyn EllipticOperator, scheme: &'a Scheme) -> Result<Self, GridError> {
        if op.dim() != scheme.grid.dim() {
            return Err(GridError::Operator(crate::error::OperatorError::DimensionMismatch {
                expected: scheme.grid.dim(),
                got: op.dim(),
                what: "operator",
            }));
        }
        let grid = &scheme.grid;
        let kind = match (scheme.mode, op.form()) {
            (DiscretizationMode::Monotone, OperatorForm::Pucci(p)) => Kind::Pucci(p),
            (mode, OperatorForm::Controls(controls, combiner)) => {
                let mut monotone = mode == DiscretizationMode::Monotone;
                let stencils = controls
                    .iter()
                    .map(|c| {
                        if mode == DiscretizationMode::Monotone {
                            if let Some(s) = monotone_control_stencil(c, grid) {
                                return s;
                            }
                        }
                        monotone = false;
                        centered_control_stencil(c, grid)
                    })
                    .collect::<Vec<_>>();
                let monotone = monotone && stencils.iter().all(LinearStencil::is_monotone);
                Kind::Controls {
                    controls,
                    combiner,
                    stencils,
                    monotone,
                }
            }
            _ => Kind::Generic,
        };
        Ok(Self { op, scheme, kind })
    }

    pub fn operator(&self) -> &dyn EllipticOperator {
        self.op
    }

    pub fn scheme(&self) -> &Scheme {
        self.scheme
    }

    pub fn grid(&self) -> &Grid {
        &self.scheme.grid
    }

    /// Whether `F_h(z)(x)` is nonincreasing in every off-center value.
    pub fn is_monotone(&self) -> bool {
        match &self.kind {
            Kind::Pucci(_) => true,
            Kind::Controls { monotone, .. } => *monotone,
            Kind::Generic => false,
        }
    }

    /// Whether the operator is a sup/inf of linear controls.
    pub fn is_control_form(&self) -> bool {
        matches!(self.kind, Kind::Controls { .. })
    }

    pub fn control_count(&self) -> usize {
        match &self.kind {
            Kind::Controls { controls, .. } => controls.len(),
            _ => 0,
        }
    }

    /// Half-bandwidth of the Jacobian in flat node numbering.
    pub fn bandwidth(&self) -> usize {
        let reach = match &self.kind {
            Kind::Pucci(_) => {
                let r = self.scheme.frames.reach();
                [r[0].max(1), r[1].max(1)]
            }
            _ => [1, 1],
        };
        let g = self.grid();
        if g.dim() == 1 {
            reach[0]
        } else {
            reach[1] * g.nodes(0) + reach[0]
        }
    }

    /// Bound on the sum of the diagonal Jacobian entry over all nodes and
    /// states; sizes the pseudo-time step.
    pub fn lipschitz_bound(&self) -> f64 {
        let g = self.grid();
        match &self.kind {
            Kind::Pucci(p) => {
                let second = self
                    .scheme
                    .frames
                    .frames()
                    .iter()
                    .map(|f| f.iter().map(|&e| 2.0 * p.big_lambda / g.step_length_sq(e)).sum::<f64>())
                    .fold(0.0, f64::max);
                let grad = (0..g.dim())
                    .map(|a| g.spacing(a).powi(-2))
                    .sum::<f64>()
                    .sqrt();
                second + p.gamma * grad + p.zeroth_order
            }
            Kind::Controls { stencils, .. } => stencils
                .iter()
                .map(|s| s.center().max(s.off_center_abs()))
                .fold(0.0, f64::max),
            Kind::Generic => {
                let s = self.op.structure();
                let dx = g.min_spacing();
                let arms = if g.dim() == 2 { 3.0 } else { 1.0 };
                2.0 * arms * s.big_lambda / (dx * dx)
                    + s.gamma * g.dim() as f64 / dx
                    + self.op.zeroth_order_lipschitz()
            }
        }
    }

    fn point(&self, k: Node) -> [f64; 2] {
        self.grid().point(k)
    }

    fn pucci_value(&self, p: &PucciOperator, z: &GridFunction, k: Node, t: f64) -> (f64, usize) {
        let frames = self.scheme.frames.frames();
        let mut best = f64::NAN;
        let mut arg = 0;
        for (i, f) in frames.iter().enumerate() {
            let v: f64 = f
                .iter()
                .map(|&e| p.phi(directional_second_difference(z, k, e)))
                .sum();
            let better = match p.extremal {
                crate::operators::Extremal::Plus => v > best,
                crate::operators::Extremal::Minus => v < best,
            };
            if i == 0 || better {
                best = v;
                arg = i;
            }
        }
        let which = Upwind::from_sign(p.sign());
        let m = upwind_slopes(z, k, which);
        let grad = (m[0] * m[0] + m[1] * m[1]).sqrt();
        let x = self.point(k);
        let value = best
            + p.sign() * p.gamma * grad
            + p.zeroth_order * z.get(k)
            + p.forcing.value(&x[..self.grid().dim()], t);
        (value, arg)
    }

    fn generic_value(&self, z: &GridFunction, k: Node, t: f64) -> f64 {
        let d = self.grid().dim();
        let m = discrete_hessian(z, k);
        let p = centered_gradient(z, k);
        let x = self.point(k);
        self.op.evaluate(&m, &p, z.get(k), &x[..d], t)
    }

    /// Value of control `j`'s discrete linear operator at node `k`.
    pub fn control_value(&self, j: usize, z: &GridFunction, k: Node, t: f64) -> f64 {
        match &self.kind {
            Kind::Controls {
                controls, stencils, ..
            } => {
                let x = self.point(k);
                stencils[j].apply(z, k) + controls[j].forcing.value(&x[..self.grid().dim()], t)
            }
            _ => panic!("control_value on an operator without control form"),
        }
    }

    /// Jacobian row of control `j` (constant in `z`).
    pub fn control_row(&self, j: usize, k: Node) -> JacobianRow {
        match &self.kind {
            Kind::Controls { stencils, .. } => self.to_row(k, &stencils[j].terms),
            _ => panic!("control_row on an operator without control form"),
        }
    }

    /// Active control at node `k` and the combined value.
    pub fn active_control(&self, z: &GridFunction, k: Node, t: f64) -> (f64, usize) {
        match &self.kind {
            Kind::Controls { controls, combiner, .. } => {
                let mut best = self.control_value(0, z, k, t);
                let mut arg = 0;
                for j in 1..controls.len() {
                    let v = self.control_value(j, z, k, t);
                    if combiner.pick(best, v) {
                        best = v;
                        arg = j;
                    }
                }
                (best, arg)
            }
            _ => panic!("active_control on an operator without control form"),
        }
    }

    /// `F_h(z)` at node `k` and time `t`.
    pub fn node_value(&self, z: &GridFunction, k: Node, t: f64) -> f64 {
        match &self.kind {
            Kind::Pucci(p) => self.pucci_value(p, z, k, t).0,
            Kind::Controls { .. } => self.active_control(z, k, t).0,
            Kind::Generic => self.generic_value(z, k, t),
        }
    }

    /// `F_h(z)` at every node.
    pub fn apply(&self, z: &GridFunction, t: f64) -> Vec<f64> {
        let n = self.grid().len();
        if n >= PARALLEL_THRESHOLD {
            (0..n).into_par_iter().map(|k| self.node_value(z, k, t)).collect()
        } else {
            (0..n).map(|k| self.node_value(z, k, t)).collect()
        }
    }

    /// `F_h(z) + (z - z_prev) / h` at every node.
    pub fn residual(&self, z: &GridFunction, z_prev: &GridFunction, h: f64, t: f64) -> Vec<f64> {
        let f = self.apply(z, t);
        f.into_iter()
            .zip(z.values().iter().zip(z_prev.values()))
            .map(|(fk, (zk, pk))| fk + zk / h - pk / h)
            .collect()
    }

    fn to_row(&self, k: Node, terms: &[(Direction, f64)]) -> JacobianRow {
        let g = self.grid();
        let mut row: JacobianRow = Vec::with_capacity(terms.len());
        for &(o, c) in terms {
            if let Some(j) = g.neighbor(k, o) {
                match row.iter_mut().find(|(col, _)| *col == j) {
                    Some((_, v)) => *v += c,
                    None => row.push((j, c)),
                }
            }
        }
        row
    }

    /// A generalized-derivative row of `F_h` at node `k`: the active frame or
    /// control for max/min forms, one-sided differences with probe
    /// `fd_epsilon * (1 + |z_j|)` otherwise.
    pub fn jacobian_row(&self, z: &GridFunction, k: Node, t: f64, fd_epsilon: f64) -> JacobianRow {
        match &self.kind {
            Kind::Pucci(p) => {
                let (_, frame) = self.pucci_value(p, z, k, t);
                let mut st = LinearStencil::default();
                for &e in &self.scheme.frames.frames()[frame] {
                    let slope = p.phi_slope(directional_second_difference(z, k, e));
                    // phi(s) has slope `slope`; s depends on z as a second difference.
                    add_second_difference(&mut st, self.grid(), e, -slope);
                }
                let which = Upwind::from_sign(p.sign());
                let m = upwind_slopes(z, k, which);
                let norm = (m[0] * m[0] + m[1] * m[1]).sqrt();
                if p.gamma > 0.0 && norm > 0.0 {
                    for axis in 0..self.grid().dim() {
                        if m[axis] <= 0.0 {
                            continue;
                        }
                        let e = unit(axis);
                        let dx = self.grid().spacing(axis);
                        let zk = z.get(k);
                        let back = (zk - z.at_offset(k, neg(e))) / dx;
                        let fwd = (z.at_offset(k, e) - zk) / dx;
                        let nbr = match which {
                            Upwind::Plus => {
                                if back >= -fwd {
                                    neg(e)
                                } else {
                                    e
                                }
                            }
                            Upwind::Minus => {
                                if fwd >= -back {
                                    e
                                } else {
                                    neg(e)
                                }
                            }
                        };
                        let w = p.gamma * m[axis] / (norm * dx);
                        st.add([0, 0], w);
                        st.add(nbr, -w);
                    }
                }
                st.add([0, 0], p.zeroth_order);
                self.to_row(k, &st.terms)
            }
            Kind::Controls { stencils, .. } => {
                let (_, j) = self.active_control(z, k, t);
                self.to_row(k, &stencils[j].terms)
            }
            Kind::Generic => {
                let g = self.grid();
                let base = self.generic_value(z, k, t);
                let mut scratch = z.clone();
                let mut row = JacobianRow::new();
                let ys: &[i32] = if g.dim() == 1 { &[0] } else { &[-1, 0, 1] };
                for &oy in ys {
                    for ox in -1..=1 {
                        if let Some(j) = g.neighbor(k, [ox, oy]) {
                            let zj = z.get(j);
                            let eps = fd_epsilon * (1.0 + zj.abs());
                            scratch.values_mut()[j] = zj + eps;
                            let v = self.generic_value(&scratch, k, t);
                            scratch.values_mut()[j] = zj;
                            let c = (v - base) / eps;
                            if c != 0.0 {
                                row.push((j, c));
                            }
                        }
                    }
                }
                row
            }
        }
    }
}

/// `R(z) = F_h(z) + z / h - z_prev / h` at every interior node.
pub fn assemble_residual(
    op: &dyn EllipticOperator,
    scheme: &Scheme,
    z: &GridFunction,
    z_prev: &GridFunction,
    h: f64,
    t: f64,
) -> Result<GridFunction, GridError> {
    if !(h > 0.0) {
        return Err(GridError::NonPositiveStep(h));
    }
    if *z.grid() != scheme.grid || *z_prev.grid() != scheme.grid {
        return Err(GridError::GridMismatch);
    }
    let d = DiscreteOperator::new(op, scheme)?;
    GridFunction::from_values(scheme.grid, d.residual(z, z_prev, h, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::operators::{BellmanOperator, Extremal, Forcing, LinearOperator};

    fn neg_second_plus_one() -> LinearOperator {
        LinearOperator::new(SymMatrix::identity(1), vec![0.0], 0.0, Forcing::Affine { value: 1.0, rate: 0.0 })
            .unwrap()
    }

    #[test]
    fn single_node_residual_vanishes_at_closed_form() {
        let g = Grid::interval(0.0, 1.0, 1).unwrap();
        let s = Scheme::monotone(g);
        let op = neg_second_plus_one();
        for h in [0.1, 0.5, 1.0] {
            let z = GridFunction::from_values(g, vec![-h / (8.0 * h + 1.0)]).unwrap();
            let r = assemble_residual(&op, &s, &z, &GridFunction::zeros(g), h, h).unwrap();
            assert!(r.get(0).abs() < 1e-14, "h={h}: {}", r.get(0));
        }
    }

    #[test]
    fn residual_errors() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        let s = Scheme::monotone(g);
        let op = neg_second_plus_one();
        let z = GridFunction::zeros(g);
        assert!(matches!(
            assemble_residual(&op, &s, &z, &z, 0.0, 0.0),
            Err(GridError::NonPositiveStep(_))
        ));
        let other = GridFunction::zeros(Grid::interval(0.0, 1.0, 4).unwrap());
        assert!(matches!(
            assemble_residual(&op, &s, &z, &other, 0.1, 0.0),
            Err(GridError::GridMismatch)
        ));
    }

    fn pucci(extremal: Extremal, dim: usize) -> PucciOperator {
        PucciOperator::new(extremal, dim, 1.0, 2.0, 0.5, 0.25, Forcing::SineProduct { amplitude: 1.0, rate: 0.0 })
            .unwrap()
    }

    fn sample(g: Grid, seed: u64) -> GridFunction {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        GridFunction::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn check_jacobian_matches_differences(op: &dyn EllipticOperator, g: Grid) {
        let s = Scheme::monotone(g);
        let d = DiscreteOperator::new(op, &s).unwrap();
        let z = sample(g, 3);
        for k in 0..g.len() {
            let row = d.jacobian_row(&z, k, 0.3, 1e-7);
            // Directional derivative along a random direction, small enough to
            // stay inside one smooth piece for generic data.
            let dir = sample(g, 100 + k as u64);
            let eps = 1e-9;
            let zp = z.lincomb(1.0, &dir, eps);
            let fd = (d.node_value(&zp, k, 0.3) - d.node_value(&z, k, 0.3)) / eps;
            let lin: f64 = row.iter().map(|&(j, c)| c * dir.get(j)).sum();
            assert!((fd - lin).abs() < 1e-4 * (1.0 + lin.abs()), "node {k}: {fd} vs {lin}");
        }
    }

    #[test]
    fn active_jacobians_match_directional_derivatives() {
        check_jacobian_matches_differences(&pucci(Extremal::Plus, 1), Grid::interval(0.0, 1.0, 9).unwrap());
        check_jacobian_matches_differences(&pucci(Extremal::Minus, 1), Grid::interval(0.0, 1.0, 9).unwrap());
        let sq = Grid::rectangle([0.0, 0.0], [1.0, 1.0], [5, 5]).unwrap();
        check_jacobian_matches_differences(&pucci(Extremal::Plus, 2), sq);
        check_jacobian_matches_differences(&pucci(Extremal::Minus, 2), sq);
        let bell = BellmanOperator::new(
            vec![
                Control::new(
                    SymMatrix::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]]).unwrap(),
                    vec![0.5, 0.0],
                    0.0,
                    Forcing::Affine { value: -1.0, rate: 1.0 },
                ),
                Control::new(
                    SymMatrix::from_rows(&[vec![1.5, -0.5], vec![-0.5, 1.5]]).unwrap(),
                    vec![0.0, -0.5],
                    0.5,
                    Forcing::SineProduct { amplitude: -2.0, rate: 1.0 },
                ),
            ],
            Combiner::Sup,
            1.0,
            2.0,
        )
        .unwrap();
        check_jacobian_matches_differences(&bell, sq);
    }

    fn check_monotone(op: &dyn EllipticOperator, g: Grid) {
        let s = Scheme::monotone(g);
        let d = DiscreteOperator::new(op, &s).unwrap();
        assert!(d.is_monotone());
        let z = sample(g, 7);
        for k in 0..g.len() {
            let base = d.node_value(&z, k, 0.0);
            for j in 0..g.len() {
                if j == k {
                    continue;
                }
                let mut bumped = z.clone();
                bumped.values_mut()[j] += 0.37;
                assert!(d.node_value(&bumped, k, 0.0) <= base + 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_neighbors() {
        let sq = Grid::rectangle([0.0, 0.0], [1.0, 1.0], [4, 4]).unwrap();
        check_monotone(&pucci(Extremal::Plus, 2), sq);
        check_monotone(&pucci(Extremal::Minus, 2), sq);
        check_monotone(&pucci(Extremal::Plus, 1), Grid::interval(0.0, 1.0, 6).unwrap());
        let lin = LinearOperator::new(
            SymMatrix::from_rows(&[vec![2.0, -0.6], vec![-0.6, 1.0]]).unwrap(),
            vec![-1.0, 0.7],
            0.1,
            Forcing::Zero,
        )
        .unwrap();
        check_monotone(&lin, sq);
    }

    #[test]
    fn strongly_anisotropic_control_falls_back_to_centered() {
        let sq = Grid::rectangle([0.0, 0.0], [1.0, 1.0], [4, 4]).unwrap();
        let lin = LinearOperator::new(
            SymMatrix::from_rows(&[vec![1.0, 1.2], vec![1.2, 2.0]]).unwrap(),
            vec![0.0, 0.0],
            0.0,
            Forcing::Zero,
        )
        .unwrap();
        let s = Scheme::monotone(sq);
        assert!(!DiscreteOperator::new(&lin, &s).unwrap().is_monotone());
    }

    #[test]
    fn centered_mode_matches_operator_on_quadratics() {
        let sq = Grid::rectangle([0.0, 0.0], [1.0, 1.0], [6, 6]).unwrap();
        let s = Scheme::new(sq, StencilFrame::narrow(2), DiscretizationMode::Centered).unwrap();
        let op = pucci(Extremal::Plus, 2);
        let d = DiscreteOperator::new(&op, &s).unwrap();
        let u = GridFunction::from_fn(sq, |p| p[0] * p[0] - 0.5 * p[0] * p[1]);
        let k = sq.flat_index([3, 3]);
        let x = sq.point(k);
        let m = SymMatrix::from_rows(&[vec![2.0, -0.5], vec![-0.5, 0.0]]).unwrap();
        let p = [2.0 * x[0] - 0.5 * x[1], -0.5 * x[0]];
        let exact = op.evaluate(&m, &p, u.get(k), &x, 0.0);
        assert!((d.node_value(&u, k, 0.0) - exact).abs() < 1e-9);
    }
}
