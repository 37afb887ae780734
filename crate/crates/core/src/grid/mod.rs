//! Uniform Cartesian grids with homogeneous Dirichlet boundary, grid
//! functions, and monotone finite-difference discretizations.

mod scheme;
mod stencil;

pub use scheme::{assemble_residual, DiscreteOperator, DiscretizationMode, JacobianRow, Scheme};
pub use stencil::{
    backward_difference, centered_gradient, directional_second_difference, discrete_hessian,
    discrete_pucci_minus, discrete_pucci_plus, forward_difference, upwind_gradient_norm, Direction,
    StencilFrame, Upwind,
};

use crate::error::GridError;

/// Flat index of an interior node.
pub type Node = usize;

/// Uniform grid on an interval (1D) or rectangle (2D).
///
/// Axis `i` has `nodes[i]` interior nodes and spacing
/// `(upper[i] - lower[i]) / (nodes[i] + 1)`; the boundary nodes carry the
/// value zero. Interior nodes are numbered with the first axis fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    nodes: [usize; 2],
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], nodes: &[usize]) -> Result<Self, GridError> {
        let dim = nodes.len();
        if !(1..=2).contains(&dim) || lower.len() != dim || upper.len() != dim {
            return Err(GridError::UnsupportedDimension(dim));
        }
        let mut g = Grid {
            dim,
            lower: [0.0; 2],
            upper: [1.0; 2],
            nodes: [1; 2],
        };
        for axis in 0..dim {
            if nodes[axis] == 0 {
                return Err(GridError::NoInteriorNodes { axis });
            }
            if !(upper[axis] > lower[axis]) || !lower[axis].is_finite() || !upper[axis].is_finite() {
                return Err(GridError::BadExtent {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
            g.lower[axis] = lower[axis];
            g.upper[axis] = upper[axis];
            g.nodes[axis] = nodes[axis];
        }
        Ok(g)
    }

    /// `n` interior nodes on `[a, b]`.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self, GridError> {
        Self::new(&[a], &[b], &[n])
    }

    /// `nx * ny` interior nodes on `[ax, bx] x [ay, by]`.
    pub fn rectangle(lower: [f64; 2], upper: [f64; 2], nodes: [usize; 2]) -> Result<Self, GridError> {
        Self::new(&lower, &upper, &nodes)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.nodes[axis] + 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Number of interior nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.nodes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of closure index `i` in `0..=n+1` along `axis`; exact at both ends.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let n1 = (self.nodes[axis] + 1) as f64;
        let (a, b) = (self.lower[axis], self.upper[axis]);
        if i == 0 {
            a
        } else if i == self.nodes[axis] + 1 {
            b
        } else {
            a + (b - a) * (i as f64 / n1)
        }
    }

    /// Interior multi-index (0-based) of a flat node index.
    #[inline]
    pub fn multi_index(&self, k: Node) -> [usize; 2] {
        if self.dim == 1 {
            [k, 0]
        } else {
            [k % self.nodes[0], k / self.nodes[0]]
        }
    }

    #[inline]
    pub fn flat_index(&self, ij: [usize; 2]) -> Node {
        if self.dim == 1 {
            ij[0]
        } else {
            ij[0] + self.nodes[0] * ij[1]
        }
    }

    /// Physical coordinates of an interior node (`dim` entries used).
    #[inline]
    pub fn point(&self, k: Node) -> [f64; 2] {
        let ij = self.multi_index(k);
        let mut p = [0.0; 2];
        for (axis, pa) in p.iter_mut().enumerate().take(self.dim) {
            *pa = self.coord(axis, ij[axis] + 1);
        }
        p
    }

    /// Interior node reached from `k` by a lattice offset, or `None` if the
    /// offset lands on or beyond the boundary.
    #[inline]
    pub fn neighbor(&self, k: Node, offset: Direction) -> Option<Node> {
        let ij = self.multi_index(k);
        let mut out = [0usize; 2];
        for axis in 0..self.dim {
            let v = ij[axis] as i64 + offset[axis] as i64;
            if v < 0 || v >= self.nodes[axis] as i64 {
                return None;
            }
            out[axis] = v as usize;
        }
        if self.dim == 1 && offset[1] != 0 {
            return None;
        }
        Some(self.flat_index(out))
    }

    /// Squared physical length of a lattice step.
    #[inline]
    pub fn step_length_sq(&self, e: Direction) -> f64 {
        (0..self.dim)
            .map(|a| {
                let d = e[a] as f64 * self.spacing(a);
                d * d
            })
            .sum()
    }

    /// Whether all cells are squares (needed for diagonal stencils to be orthogonal).
    pub fn has_square_cells(&self) -> bool {
        self.dim == 1 || (self.spacing(0) - self.spacing(1)).abs() <= 1e-12 * self.spacing(0)
    }

    /// Number of closure nodes (interior plus boundary).
    pub fn closure_len(&self) -> usize {
        self.nodes[..self.dim].iter().map(|n| n + 2).product()
    }

    /// Closure multi-index of closure flat index `c`.
    pub fn closure_multi_index(&self, c: usize) -> [usize; 2] {
        if self.dim == 1 {
            [c, 0]
        } else {
            let w = self.nodes[0] + 2;
            [c % w, c / w]
        }
    }

    pub fn closure_point(&self, c: usize) -> [f64; 2] {
        let ij = self.closure_multi_index(c);
        let mut p = [0.0; 2];
        for (axis, pa) in p.iter_mut().enumerate().take(self.dim) {
            *pa = self.coord(axis, ij[axis]);
        }
        p
    }

    /// Interior flat index of a closure node, `None` on the boundary.
    pub fn closure_to_interior(&self, c: usize) -> Option<Node> {
        let ij = self.closure_multi_index(c);
        let mut inner = [0usize; 2];
        for axis in 0..self.dim {
            if ij[axis] == 0 || ij[axis] == self.nodes[axis] + 1 {
                return None;
            }
            inner[axis] = ij[axis] - 1;
        }
        Some(self.flat_index(inner))
    }

    pub fn interior_to_closure(&self, k: Node) -> usize {
        let ij = self.multi_index(k);
        if self.dim == 1 {
            ij[0] + 1
        } else {
            (ij[0] + 1) + (self.nodes[0] + 2) * (ij[1] + 1)
        }
    }
}

/// Values at the interior nodes of a grid; the boundary trace is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at interior nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                f(&p[..grid.dim()])
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, k: Node) -> f64 {
        self.values[k]
    }

    /// Value at `k + offset`, zero on or beyond the boundary.
    #[inline]
    pub fn at_offset(&self, k: Node, offset: Direction) -> f64 {
        match self.grid.neighbor(k, offset) {
            Some(j) => self.values[j],
            None => 0.0,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    /// `||self - other||_inf`.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }

    /// `a * self + b * other`, nodewise.
    pub fn lincomb(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Values on every closure node, with zeros on the boundary.
    pub fn to_closure(&self) -> ClosedGridFunction {
        let mut values = vec![0.0; self.grid.closure_len()];
        for (k, v) in self.values.iter().enumerate() {
            values[self.grid.interior_to_closure(k)] = *v;
        }
        ClosedGridFunction {
            grid: self.grid,
            values,
        }
    }
}

/// Values on all closure nodes, boundary included (boundary need not be zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedGridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl ClosedGridFunction {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.closure_len() {
            return Err(GridError::LengthMismatch {
                expected: grid.closure_len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at closure multi-index.
    pub fn at(&self, ij: [usize; 2]) -> f64 {
        let c = if self.grid.dim() == 1 {
            ij[0]
        } else {
            ij[0] + (self.grid.nodes(0) + 2) * ij[1]
        };
        self.values[c]
    }

    /// Value at interior node `k` shifted by `offset`, if the result is a closure node.
    pub fn at_offset(&self, k: Node, offset: Direction) -> Option<f64> {
        let ij = self.grid.multi_index(k);
        let mut c = [0usize; 2];
        for axis in 0..self.grid.dim() {
            let v = ij[axis] as i64 + 1 + offset[axis] as i64;
            if v < 0 || v > self.grid.nodes(axis) as i64 + 1 {
                return None;
            }
            c[axis] = v as usize;
        }
        Some(self.at(c))
    }

    pub fn interior(&self) -> GridFunction {
        let values = (0..self.grid.len())
            .map(|k| self.values[self.grid.interior_to_closure(k)])
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_are_exact_at_the_ends() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.coord(0, 0), 0.0);
        assert_eq!(g.coord(0, 4), 1.0);
        assert_eq!(g.point(1)[0], 0.5);
        let g2 = Grid::rectangle([0.0, -1.0], [0.3, 1.0], [2, 3]).unwrap();
        assert_eq!(g2.len(), 6);
        assert_eq!(g2.coord(0, 3), 0.3);
        assert_eq!(g2.multi_index(5), [1, 2]);
        assert_eq!(g2.flat_index([1, 2]), 5);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::interval(0.0, 1.0, 0), Err(GridError::NoInteriorNodes { axis: 0 })));
        assert!(matches!(Grid::interval(1.0, 1.0, 3), Err(GridError::BadExtent { .. })));
        assert!(Grid::new(&[0.0; 3], &[1.0; 3], &[2; 3]).is_err());
    }

    #[test]
    fn neighbors_stop_at_boundary() {
        let g = Grid::rectangle([0.0, 0.0], [1.0, 1.0], [3, 3]).unwrap();
        assert_eq!(g.neighbor(0, [-1, 0]), None);
        assert_eq!(g.neighbor(0, [1, 1]), Some(4));
        assert_eq!(g.neighbor(8, [1, 0]), None);
        let u = GridFunction::from_values(g, (0..9).map(|v| v as f64 + 1.0).collect()).unwrap();
        assert_eq!(u.at_offset(4, [1, -1]), 3.0);
        assert_eq!(u.at_offset(4, [2, 0]), 0.0);
    }

    #[test]
    fn closure_round_trip() {
        let g = Grid::rectangle([0.0, 0.0], [1.0, 2.0], [2, 3]).unwrap();
        let u = GridFunction::from_fn(g, |p| p[0] + 10.0 * p[1]);
        let c = u.to_closure();
        assert_eq!(c.values().len(), 20);
        assert_eq!(c.interior(), u);
        for idx in 0..g.closure_len() {
            match g.closure_to_interior(idx) {
                Some(k) => assert_eq!(g.interior_to_closure(k), idx),
                None => assert_eq!(c.values()[idx], 0.0),
            }
        }
    }
}
