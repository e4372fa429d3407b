//! Compressed-row complex operators and the matrix-free operator trait.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::C64;

/// Rows per parallel work item in matrix-vector products.
const PAR_ROWS: usize = 2048;

/// Anything that can be applied to a complex vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }

    fn expectation(&self, x: &[C64]) -> C64 {
        let y = self.matvec(x);
        dot(x, &y)
    }
}

/// Sparse square operator in CSR layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>, hermitian: bool) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { dim, row_ptr, cols, vals, hermitian }
    }

    /// Builds a CSR operator from a fixed pattern and matching values.
    pub(crate) fn from_parts(dim: usize, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<C64>, hermitian: bool) -> Self {
        debug_assert_eq!(row_ptr.len(), dim + 1);
        debug_assert_eq!(cols.len(), vals.len());
        SparseOperator { dim, row_ptr, cols, vals, hermitian }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        SparseOperator {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            hermitian: true,
        }
    }

    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new(), hermitian: true }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// `A + B`, keeping the hermitian flag only if both carry it.
    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for op in [self, other] {
            for r in 0..op.dim {
                for (c, v) in op.row(r) {
                    trip.push((r, c, v));
                }
            }
        }
        SparseOperator::from_triplets(self.dim, trip, self.hermitian && other.hermitian)
    }

    pub fn scale(&self, s: C64) -> SparseOperator {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    /// Restriction `P A P` where `P` projects onto the indices with `keep[i]`.
    pub fn project(&self, keep: &[bool]) -> SparseOperator {
        assert_eq!(keep.len(), self.dim);
        let mut trip = Vec::with_capacity(self.nnz());
        for r in (0..self.dim).filter(|&r| keep[r]) {
            for (c, v) in self.row(r) {
                if keep[c] {
                    trip.push((r, c, v));
                }
            }
        }
        SparseOperator::from_triplets(self.dim, trip, self.hermitian)
    }

    /// Largest `|A_ij - conj(A_ji)|` over `samples` random stored entries
    /// (all entries when `samples` is `None`).
    pub fn hermiticity_defect(&self, samples: Option<usize>, seed: u64) -> f64 {
        let check = |r: usize, idx: usize| {
            let c = self.cols[idx];
            (self.vals[idx] - self.get(c, r).conj()).norm()
        };
        match samples {
            None => (0..self.dim)
                .flat_map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, i)))
                .map(|(r, i)| check(r, i))
                .fold(0.0, f64::max),
            Some(n) => {
                if self.nnz() == 0 {
                    return 0.0;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut worst = 0.0f64;
                for _ in 0..n {
                    let idx = rng.random_range(0..self.nnz());
                    let r = self.row_ptr.partition_point(|&p| p <= idx) - 1;
                    worst = worst.max(check(r, idx));
                }
                worst
            }
        }
    }

    /// Rough upper bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub(crate) fn vals_mut(&mut self) -> &mut [C64] {
        &mut self.vals
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        let row = |r: usize| {
            let mut acc = C64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            acc
        };
        if self.dim >= 2 * PAR_ROWS {
            y.par_chunks_mut(PAR_ROWS).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * PAR_ROWS;
                for (j, yj) in ys.iter_mut().enumerate() {
                    *yj = row(base + j);
                }
            });
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }
}

/// `1 ⊗ A` acting on vectors laid out as contiguous blocks of `A.dim()`.
pub struct BlockDiagonal<'a, Op: LinearOperator> {
    pub inner: &'a Op,
    pub blocks: usize,
}

impl<Op: LinearOperator> LinearOperator for BlockDiagonal<'_, Op> {
    fn dim(&self) -> usize {
        self.inner.dim() * self.blocks
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let d = self.inner.dim();
        y.par_chunks_mut(d).zip(x.par_chunks(d)).for_each(|(yb, xb)| self.inner.apply(xb, yb));
    }
}

/// Dense matrix wrapper, mostly for tests and small one-body operators.
impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.nrows() {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..self.ncols() {
                acc += self[(r, c)] * x[c];
            }
            y[r] = acc;
        }
    }
}

/// `⟨x, y⟩ = Σ conj(x) y`, accumulated sequentially so results are reproducible.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}
