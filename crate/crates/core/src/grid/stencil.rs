use super::{Grid, GridFunction, Node};
use crate::error::GridError;
use crate::linalg::SymMatrix;

/// Integer lattice direction; the second component is ignored in 1D.
pub type Direction = [i32; 2];

/// Sets of mutually orthogonal lattice directions used to discretize the
/// Pucci operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilFrame {
    dim: usize,
    frames: Vec<Vec<Direction>>,
}

impl StencilFrame {
    /// Validates each frame: `dim` nonzero, pairwise orthogonal directions.
    pub fn new(dim: usize, frames: Vec<Vec<Direction>>) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if frames.is_empty() {
            return Err(GridError::BadFrame("no frames".into()));
        }
        for (f, frame) in frames.iter().enumerate() {
            if frame.len() != dim {
                return Err(GridError::BadFrame(format!(
                    "frame {f} has {} directions, expected {dim}",
                    frame.len()
                )));
            }
            for e in frame {
                if e[..dim].iter().all(|&c| c == 0) || (dim == 1 && e[1] != 0) {
                    return Err(GridError::BadFrame(format!("frame {f}: invalid direction {e:?}")));
                }
            }
            for i in 0..frame.len() {
                for j in i + 1..frame.len() {
                    let dot: i64 = (0..dim).map(|a| frame[i][a] as i64 * frame[j][a] as i64).sum();
                    if dot != 0 {
                        return Err(GridError::BadFrame(format!(
                            "frame {f}: {:?} and {:?} are not orthogonal",
                            frame[i], frame[j]
                        )));
                    }
                }
            }
        }
        Ok(Self { dim, frames })
    }

    /// The coordinate axes only.
    pub fn axis(dim: usize) -> Self {
        let frames = if dim == 1 {
            vec![vec![[1, 0]]]
        } else {
            vec![vec![[1, 0], [0, 1]]]
        };
        Self { dim, frames }
    }

    /// Axis frame plus the diagonal frame `(1,1)/(1,-1)` in 2D.
    pub fn narrow(dim: usize) -> Self {
        if dim == 1 {
            return Self::axis(1);
        }
        Self {
            dim,
            frames: vec![vec![[1, 0], [0, 1]], vec![[1, 1], [1, -1]]],
        }
    }

    /// `narrow` plus the knight-move frames `(2,1)/(-1,2)` and `(1,2)/(-2,1)`.
    pub fn wide(dim: usize) -> Self {
        if dim == 1 {
            return Self::axis(1);
        }
        let mut s = Self::narrow(2);
        s.frames.push(vec![[2, 1], [-1, 2]]);
        s.frames.push(vec![[1, 2], [-2, 1]]);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> &[Vec<Direction>] {
        &self.frames
    }

    /// Largest offset per axis over all directions.
    pub fn reach(&self) -> [usize; 2] {
        let mut r = [0usize; 2];
        for e in self.frames.iter().flatten() {
            for a in 0..2 {
                r[a] = r[a].max(e[a].unsigned_abs() as usize);
            }
        }
        r
    }

    /// Largest number of directions in a frame (equals the dimension).
    pub fn arms(&self) -> usize {
        self.dim
    }

    /// Frames are orthogonal in physical space only on square cells.
    pub fn check_grid(&self, grid: &Grid) -> Result<(), GridError> {
        if grid.dim() != self.dim {
            return Err(GridError::BadFrame(format!(
                "frame dimension {} on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        let mixed = self
            .frames
            .iter()
            .flatten()
            .any(|e| e[0] != 0 && e[1] != 0);
        if mixed && !grid.has_square_cells() {
            return Err(GridError::BadFrame(
                "diagonal directions need equal spacing on both axes".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
fn neg(e: Direction) -> Direction {
    [-e[0], -e[1]]
}

/// `(u(x + e) - 2 u(x) + u(x - e)) / |e|^2` with zero extension past the boundary.
#[inline]
pub fn directional_second_difference(u: &GridFunction, k: Node, e: Direction) -> f64 {
    let len2 = u.grid().step_length_sq(e);
    (u.at_offset(k, e) - 2.0 * u.get(k) + u.at_offset(k, neg(e))) / len2
}

/// `(u(x) - u(x - e_axis)) / dx`.
#[inline]
pub fn backward_difference(u: &GridFunction, k: Node, axis: usize) -> f64 {
    let mut e = [0; 2];
    e[axis] = 1;
    (u.get(k) - u.at_offset(k, neg(e))) / u.grid().spacing(axis)
}

/// `(u(x + e_axis) - u(x)) / dx`.
#[inline]
pub fn forward_difference(u: &GridFunction, k: Node, axis: usize) -> f64 {
    let mut e = [0; 2];
    e[axis] = 1;
    (u.at_offset(k, e) - u.get(k)) / u.grid().spacing(axis)
}

pub fn centered_gradient(u: &GridFunction, k: Node) -> Vec<f64> {
    let g = u.grid();
    (0..g.dim())
        .map(|axis| {
            let mut e = [0; 2];
            e[axis] = 1;
            (u.at_offset(k, e) - u.at_offset(k, neg(e))) / (2.0 * g.spacing(axis))
        })
        .collect()
}

/// Centered second differences on the diagonal, 4-point cross difference off it.
pub fn discrete_hessian(u: &GridFunction, k: Node) -> SymMatrix {
    let g = u.grid();
    let d = g.dim();
    let mut m = SymMatrix::zeros(d);
    for axis in 0..d {
        let mut e = [0; 2];
        e[axis] = 1;
        m.set(axis, axis, directional_second_difference(u, k, e));
    }
    if d == 2 {
        let cross = (u.at_offset(k, [1, 1]) - u.at_offset(k, [1, -1]) - u.at_offset(k, [-1, 1])
            + u.at_offset(k, [-1, -1]))
            / (4.0 * g.spacing(0) * g.spacing(1));
        m.set(0, 1, cross);
    }
    m
}

/// Which one-sided combination enters the upwind gradient norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upwind {
    /// `sqrt(sum_i max(D-u, -D+u, 0)^2)`: nonincreasing in neighbor values.
    Plus,
    /// `sqrt(sum_i max(D+u, -D-u, 0)^2)`: nondecreasing in neighbor values.
    Minus,
}

impl Upwind {
    pub fn from_sign(sign: f64) -> Self {
        if sign >= 0.0 {
            Upwind::Plus
        } else {
            Upwind::Minus
        }
    }
}

/// Per-axis upwind slopes `m_i >= 0` entering [`upwind_gradient_norm`].
#[inline]
pub(crate) fn upwind_slopes(u: &GridFunction, k: Node, which: Upwind) -> [f64; 2] {
    let mut m = [0.0; 2];
    for (axis, ma) in m.iter_mut().enumerate().take(u.grid().dim()) {
        let back = backward_difference(u, k, axis);
        let fwd = forward_difference(u, k, axis);
        *ma = match which {
            Upwind::Plus => back.max(-fwd).max(0.0),
            Upwind::Minus => fwd.max(-back).max(0.0),
        };
    }
    m
}

/// Upwind approximation of `|Du|` such that `+gamma * norm` (for `Plus`) or
/// `-gamma * norm` (for `Minus`) is a monotone term.
pub fn upwind_gradient_norm(u: &GridFunction, k: Node, which: Upwind) -> f64 {
    let m = upwind_slopes(u, k, which);
    (m[0] * m[0] + m[1] * m[1]).sqrt()
}

#[inline]
fn phi_plus(s: f64, lambda: f64, big_lambda: f64) -> f64 {
    if s > 0.0 {
        -lambda * s
    } else {
        -big_lambda * s
    }
}

#[inline]
fn phi_minus(s: f64, lambda: f64, big_lambda: f64) -> f64 {
    if s > 0.0 {
        -big_lambda * s
    } else {
        -lambda * s
    }
}

/// Max over frames of `sum_i phi(s_i)`, `phi(s) = -lambda s+ + Lambda s-`.
pub fn discrete_pucci_plus(
    u: &GridFunction,
    k: Node,
    lambda: f64,
    big_lambda: f64,
    frames: &StencilFrame,
) -> f64 {
    frames
        .frames()
        .iter()
        .map(|f| {
            f.iter()
                .map(|&e| phi_plus(directional_second_difference(u, k, e), lambda, big_lambda))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Min over frames of `sum_i phi(s_i)`, `phi(s) = -Lambda s+ + lambda s-`.
pub fn discrete_pucci_minus(
    u: &GridFunction,
    k: Node,
    lambda: f64,
    big_lambda: f64,
    frames: &StencilFrame,
) -> f64 {
    frames
        .frames()
        .iter()
        .map(|f| {
            f.iter()
                .map(|&e| phi_minus(directional_second_difference(u, k, e), lambda, big_lambda))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}
