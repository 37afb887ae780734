//! Randomized falsification of the ellipticity and structure conditions.
//!
//! These are samplers, not proofs: they search for a counterexample and
//! report the worst margins seen.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{euclidean_norm, pucci_minus, pucci_plus, EllipticOperator};
use crate::linalg::{SymMatrix, MAX_DIM};

const ENTRY_RANGE: f64 = 3.0;

/// Outcome of a sampler run.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub check: &'static str,
    pub samples: usize,
    /// Smallest `value - lower_bound` seen.
    pub worst_lower_margin: f64,
    /// Smallest `upper_bound - value` seen.
    pub worst_upper_margin: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub passed: bool,
}

/// The sample that produced the worst violation.
#[derive(Debug, Clone)]
pub struct Witness {
    pub m: SymMatrix,
    pub n: SymMatrix,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: f64,
    pub s: f64,
    pub x: Vec<f64>,
    pub t: f64,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// Entries uniform in `[-range, range]`, symmetrized.
pub fn random_symmetric<R: Rng>(rng: &mut R, dim: usize, range: f64) -> SymMatrix {
    let mut x = [[0.0; MAX_DIM]; MAX_DIM];
    for row in x.iter_mut().take(dim) {
        for v in row.iter_mut().take(dim) {
            *v = rng.gen_range(-range..=range);
        }
    }
    SymMatrix::symmetrize(dim, &x)
}

fn random_orthonormal<R: Rng>(rng: &mut R, dim: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
    loop {
        let mut basis = [[0.0; MAX_DIM]; MAX_DIM];
        let mut ok = true;
        for k in 0..dim {
            let mut v = [0.0; MAX_DIM];
            for vi in v.iter_mut().take(dim) {
                *vi = rng.gen_range(-1.0..=1.0);
            }
            for prev in basis.iter().take(k) {
                let dot: f64 = (0..dim).map(|i| v[i] * prev[i]).sum();
                for i in 0..dim {
                    v[i] -= dot * prev[i];
                }
            }
            let norm = euclidean_norm(&v[..dim]);
            if norm < 1e-3 {
                ok = false;
                break;
            }
            for vi in v.iter_mut().take(dim) {
                *vi /= norm;
            }
            basis[k] = v;
        }
        if ok {
            return basis;
        }
    }
}

/// `Q^T D Q` with `Q` a random rotation and `D` uniform in `(0, 2]`.
pub fn random_positive_definite<R: Rng>(rng: &mut R, dim: usize) -> SymMatrix {
    let basis = random_orthonormal(rng, dim);
    let weights: Vec<f64> = (0..dim).map(|_| 2.0 * (1.0 - rng.gen::<f64>())).collect();
    SymMatrix::from_spectrum(dim, &weights, &basis[..dim])
}

fn random_vec<R: Rng>(rng: &mut R, dim: usize, range: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-range..=range)).collect()
}

fn unit_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

struct Tracker {
    worst_lower: f64,
    worst_upper: f64,
    worst: f64,
    tolerance: f64,
    witness: Option<Witness>,
}

impl Tracker {
    fn new(tolerance: f64) -> Self {
        Self {
            worst_lower: f64::INFINITY,
            worst_upper: f64::INFINITY,
            worst: f64::INFINITY,
            tolerance,
            witness: None,
        }
    }

    fn record(&mut self, lower_margin: f64, upper_margin: f64, scale: f64, make: impl FnOnce() -> Witness) {
        self.worst_lower = self.worst_lower.min(lower_margin);
        self.worst_upper = self.worst_upper.min(upper_margin);
        let relative = lower_margin.min(upper_margin) / (1.0 + scale);
        if relative < -self.tolerance && relative < self.worst {
            self.worst = relative;
            self.witness = Some(make());
        }
    }

    fn finish(self, check: &'static str, samples: usize) -> ValidationReport {
        ValidationReport {
            check,
            samples,
            worst_lower_margin: self.worst_lower,
            worst_upper_margin: self.worst_upper,
            tolerance: self.tolerance,
            passed: self.witness.is_none(),
            witness: self.witness,
        }
    }
}

/// Samples `-Lambda ||N|| <= F(M + N, ..) - F(M, ..) <= -lambda ||N||` for
/// positive definite `N`, with `||N||` the nuclear norm (`Tr N` here).
pub fn check_uniform_ellipticity(
    op: &dyn EllipticOperator,
    sample_count: usize,
    seed: u64,
) -> ValidationReport {
    let d = op.dim();
    let s = op.structure();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = Tracker::new(1e-10);
    for _ in 0..sample_count.max(1) {
        let m = random_symmetric(&mut rng, d, ENTRY_RANGE);
        let n = random_positive_definite(&mut rng, d);
        let p = random_vec(&mut rng, d, ENTRY_RANGE);
        let r = rng.gen_range(-ENTRY_RANGE..=ENTRY_RANGE);
        let x = unit_point(&mut rng, d);
        let t = rng.gen::<f64>();
        let base = op.evaluate(&m, &p, r, &x, t);
        let value = op.evaluate(&m.add(&n), &p, r, &x, t) - base;
        let norm = n.nuclear_norm();
        let lower = -s.big_lambda * norm;
        let upper = -s.lambda * norm;
        let scale = base.abs() + s.big_lambda * norm;
        tracker.record(value - lower, upper - value, scale, || Witness {
            m,
            n,
            p: p.clone(),
            q: p.clone(),
            r,
            s: r,
            x: x.clone(),
            t,
            lower,
            value,
            upper,
        });
    }
    tracker.finish("uniform_ellipticity", sample_count.max(1))
}

/// One pair of arguments for the structure condition.
#[derive(Debug, Clone)]
pub struct StructureSample {
    pub m: SymMatrix,
    pub p: Vec<f64>,
    pub r: f64,
    pub n: SymMatrix,
    pub q: Vec<f64>,
    pub s: f64,
    pub x: Vec<f64>,
    pub t: f64,
}

/// `(lower, value, upper)` of the two-sided structure bound for one sample.
pub fn structure_margins(op: &dyn EllipticOperator, radius: f64, sample: &StructureSample) -> (f64, f64, f64) {
    let st = op.structure();
    let diff = sample.m.sub(&sample.n);
    let grad_gap: Vec<f64> = sample.p.iter().zip(&sample.q).map(|(a, b)| a - b).collect();
    let grad = st.gamma * euclidean_norm(&grad_gap);
    let value = op.evaluate(&sample.m, &sample.p, sample.r, &sample.x, sample.t)
        - op.evaluate(&sample.n, &sample.q, sample.s, &sample.x, sample.t);
    let lower = pucci_minus(&diff, st.lambda, st.big_lambda)
        - grad
        - op.omega(radius, (sample.s - sample.r).max(0.0));
    let upper = pucci_plus(&diff, st.lambda, st.big_lambda)
        + grad
        + op.omega(radius, (sample.r - sample.s).max(0.0));
    (lower, value, upper)
}

/// Samples the two-sided Pucci bound on `F(M,P,r) - F(N,Q,s)` for `|r|, |s| <= R`.
pub fn check_structure_condition(
    op: &dyn EllipticOperator,
    radius: f64,
    sample_count: usize,
    seed: u64,
) -> ValidationReport {
    assert!(radius > 0.0, "structure condition needs R > 0");
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = Tracker::new(1e-10);
    for i in 0..sample_count.max(1) {
        let m = random_symmetric(&mut rng, d, ENTRY_RANGE);
        let p = random_vec(&mut rng, d, ENTRY_RANGE);
        let r = rng.gen_range(-radius..=radius);
        // Every fourth sample perturbs only one argument group, so the
        // one-sided terms are exercised in isolation.
        let (n, q, s) = match i % 4 {
            0 => (m, p.clone(), rng.gen_range(-radius..=radius)),
            1 => (random_symmetric(&mut rng, d, ENTRY_RANGE), p.clone(), r),
            _ => (
                random_symmetric(&mut rng, d, ENTRY_RANGE),
                random_vec(&mut rng, d, ENTRY_RANGE),
                rng.gen_range(-radius..=radius),
            ),
        };
        let sample = StructureSample {
            m,
            p,
            r,
            n,
            q,
            s,
            x: unit_point(&mut rng, d),
            t: rng.gen::<f64>(),
        };
        let (lower, value, upper) = structure_margins(op, radius, &sample);
        let scale = lower.abs().max(upper.abs());
        tracker.record(value - lower, upper - value, scale, || Witness {
            m: sample.m,
            n: sample.n,
            p: sample.p.clone(),
            q: sample.q.clone(),
            r: sample.r,
            s: sample.s,
            x: sample.x.clone(),
            t: sample.t,
            lower,
            value,
            upper,
        });
    }
    tracker.finish("structure_condition", sample_count.max(1))
}
