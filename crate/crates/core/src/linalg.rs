//! Small dense symmetric matrices (d <= 3) and a banded LU solver.

use crate::error::LinalgError;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 3;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// A real symmetric `d x d` matrix with `d` in `1..=3`.
///
/// Symmetry is checked exactly at construction; every constructor either
/// produces a symmetric matrix or fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: [[f64; MAX_DIM]; MAX_DIM],
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone, Copy)]
pub struct Eigen {
    pub values: [f64; MAX_DIM],
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: [[f64; MAX_DIM]; MAX_DIM],
    pub dim: usize,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        Self {
            dim,
            entries: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i][i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.entries[i][i] = v;
        }
        m
    }

    /// Builds a matrix from rows, rejecting non-square or non-symmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LinalgError::UnsupportedDimension(dim));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::NotSquare);
            }
            for (j, &v) in row.iter().enumerate() {
                m.entries[i][j] = v;
            }
        }
        for i in 0..dim {
            for j in 0..i {
                if m.entries[i][j] != m.entries[j][i] {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(m)
    }

    /// Symmetric part `(X + X^T) / 2` of an arbitrary square array.
    pub fn symmetrize(dim: usize, x: &[[f64; MAX_DIM]; MAX_DIM]) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i][i] = x[i][i];
            for j in 0..i {
                let v = 0.5 * (x[i][j] + x[j][i]);
                m.entries[i][j] = v;
                m.entries[j][i] = v;
            }
        }
        m
    }

    /// Rank-one sum `sum_k w_k v_k v_k^T`.
    pub fn from_spectrum(dim: usize, weights: &[f64], vectors: &[[f64; MAX_DIM]]) -> Self {
        let mut m = Self::zeros(dim);
        for (w, v) in weights.iter().zip(vectors) {
            for i in 0..dim {
                for j in 0..dim {
                    m.entries[i][j] += w * v[i] * v[j];
                }
            }
        }
        m.enforce_symmetry();
        m
    }

    fn enforce_symmetry(&mut self) {
        for i in 0..self.dim {
            for j in 0..i {
                let v = 0.5 * (self.entries[i][j] + self.entries[j][i]);
                self.entries[i][j] = v;
                self.entries[j][i] = v;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    /// Sets entry `(i, j)` and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i][j] = v;
        self.entries[j][i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i][i]).sum()
    }

    /// `Tr(A M)` for two symmetric matrices of equal dimension.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[i][j] * other.entries[j][i];
            }
        }
        s
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[i][j] *= k;
            }
        }
        m
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[i][j] += other.entries[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut y = [0.0; MAX_DIM];
        for i in 0..self.dim {
            for j in 0..self.dim {
                y[i] += self.entries[i][j] * x[j];
            }
        }
        y
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.apply(x);
        (0..self.dim).map(|i| x[i] * y[i]).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.entries[i][j].abs());
            }
        }
        m
    }

    /// Eigenvalues sorted ascending. Closed form for `d <= 2`, cyclic Jacobi for `d = 3`.
    pub fn eigenvalues(&self) -> [f64; MAX_DIM] {
        match self.dim {
            1 => [self.entries[0][0], 0.0, 0.0],
            2 => {
                let (a, b, c) = (self.entries[0][0], self.entries[0][1], self.entries[1][1]);
                let mean = 0.5 * (a + c);
                let radius = (0.5 * (a - c)).hypot(b);
                [mean - radius, mean + radius, 0.0]
            }
            _ => self.eigen().values,
        }
    }

    /// Full eigendecomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> Eigen {
        let n = self.dim;
        let mut a = self.entries;
        let mut v = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in v.iter_mut().enumerate().take(n) {
            row[i] = 1.0;
        }
        let scale = self.max_abs_entry().max(f64::MIN_POSITIVE);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p][q] * a[p][q];
                }
            }
            if off.sqrt() <= JACOBI_TOL * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut().take(n) {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
        let mut values = [0.0; MAX_DIM];
        let mut vectors = [[0.0; MAX_DIM]; MAX_DIM];
        for (k, &idx) in order.iter().enumerate() {
            values[k] = a[idx][idx];
            for i in 0..n {
                vectors[k][i] = v[i][idx];
            }
        }
        Eigen {
            values,
            vectors,
            dim: n,
        }
    }

    /// Sum of the positive eigenvalues, `Tr(M+)`.
    pub fn trace_positive(&self) -> f64 {
        self.eigenvalues()[..self.dim]
            .iter()
            .map(|&l| l.max(0.0))
            .sum()
    }

    /// Sum of the magnitudes of the negative eigenvalues, `Tr(M-)`.
    pub fn trace_negative(&self) -> f64 {
        self.eigenvalues()[..self.dim]
            .iter()
            .map(|&l| (-l).max(0.0))
            .sum()
    }

    /// Positive part `M+` and negative part `M-`, both PSD, with `M = M+ - M-`.
    pub fn split_parts(&self) -> (SymMatrix, SymMatrix) {
        let e = self.eigen();
        let n = self.dim;
        let pos: Vec<f64> = e.values[..n].iter().map(|&l| l.max(0.0)).collect();
        let neg: Vec<f64> = e.values[..n].iter().map(|&l| (-l).max(0.0)).collect();
        (
            SymMatrix::from_spectrum(n, &pos, &e.vectors[..n]),
            SymMatrix::from_spectrum(n, &neg, &e.vectors[..n]),
        )
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()[..self.dim]
            .iter()
            .fold(0.0_f64, |m, &l| m.max(l.abs()))
    }

    /// Sum of eigenvalue magnitudes (equals the trace for PSD matrices).
    pub fn nuclear_norm(&self) -> f64 {
        self.eigenvalues()[..self.dim].iter().map(|l| l.abs()).sum()
    }
}

/// Square banded matrix with `lower` sub-diagonals and `upper` super-diagonals,
/// stored with room for the fill produced by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row-major band storage: row `i`, column `j` lives at
    /// `i * width + (j + lower - i)`, where `width = 2 * lower + upper + 1`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.lower + self.upper + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.lower + self.upper);
        i * self.width() + (j + self.lower - i)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) -> Result<(), LinalgError> {
        if !self.in_band(i, j) {
            return Err(LinalgError::OutsideBand { row: i, col: j });
        }
        let s = self.slot(i, j);
        self.data[s] += v;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower >= i && j <= i + self.lower + self.upper {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// `y = A x` using the declared band.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// Solves `A x = b` by LU with partial pivoting. Consumes the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        let kl = self.lower;
        let max_col = |i: usize| (i + kl + self.upper).min(n - 1);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            let col_end = max_col(k);
            if piv != k {
                for j in k..=col_end {
                    let a = self.get(k, j);
                    let c = self.get(piv, j);
                    let sk = self.slot(k, j);
                    self.data[sk] = c;
                    if j <= max_col(piv) && j + kl >= piv {
                        let sp = self.slot(piv, j);
                        self.data[sp] = a;
                    } else {
                        debug_assert!(a == 0.0);
                    }
                }
                x.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for i in (k + 1)..=last {
                let si = self.slot(i, k);
                let factor = self.data[si] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[si] = 0.0;
                for j in (k + 1)..=col_end {
                    let akj = self.get(k, j);
                    if akj != 0.0 {
                        let s = self.slot(i, j);
                        self.data[s] -= factor * akj;
                    }
                }
                x[i] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..=max_col(k) {
                s -= self.get(k, j) * x[j];
            }
            x[k] = s / self.get(k, k);
        }
        Ok(x)
    }
}
