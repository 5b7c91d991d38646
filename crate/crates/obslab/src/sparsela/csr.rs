//! Compressed-sparse-row matrices and a small abstraction for composed
//! linear maps (needed because defect operators involve resolvent and heat
//! applications that have no explicit matrix).

use crate::error::{Error, Result};

/// Sparse matrix in CSR layout.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets; duplicates are summed,
    /// explicit zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= rows || c >= cols {
                return Err(Error::Solver(format!("triplet ({r},{c}) out of {rows}x{cols}")));
            }
            if !v.is_finite() {
                return Err(Error::Solver(format!("non-finite entry at ({r},{c})")));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            vals.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { rows, cols, row_ptr, col_idx, vals, symmetric: false })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: diag.to_vec(),
            symmetric: true,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    /// Maximum absolute row sum; for symmetric matrices this bounds the
    /// spectral radius (Gershgorin).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Mark as symmetric after verifying entrywise symmetry.
    pub fn assert_symmetric(mut self, tol: f64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Solver("non-square matrix flagged symmetric".into()));
        }
        let t = self.transpose();
        let dev = self.max_abs_difference(&t);
        if dev > tol {
            return Err(Error::Solver(format!("symmetry deviation {dev:.3e} exceeds {tol:.3e}")));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.vals[k];
            }
        }
        0.0
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                dev = dev.max((self.vals[k] - other.get(r, self.col_idx[k])).abs());
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                dev = dev.max((other.vals[k] - self.get(r, other.col_idx[k])).abs());
            }
        }
        dev
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in apply");
        let mut y = vec![0.0; self.rows];
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
        y
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "dimension mismatch in apply_transpose");
        let mut y = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.vals[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((self.col_idx[k], r, self.vals[k]));
            }
        }
        let mut t = Self::from_triplets(self.cols, self.rows, triplets).expect("valid transpose");
        t.symmetric = self.symmetric;
        t
    }

    /// Sparse product `self * other` (used to assemble defect matrices like
    /// `Lap~ * J1` explicitly).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut triplets = Vec::new();
        let mut acc: Vec<f64> = vec![0.0; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[k];
                let m = self.col_idx[k];
                for k2 in other.row_ptr[m]..other.row_ptr[m + 1] {
                    let c = other.col_idx[k2];
                    if acc[c] == 0.0 {
                        touched.push(c);
                    }
                    acc[c] += a * other.vals[k2];
                }
            }
            for &c in &touched {
                if acc[c] != 0.0 {
                    triplets.push((r, c, acc[c]));
                }
                acc[c] = 0.0;
            }
            touched.clear();
        }
        Self::from_triplets(self.rows, other.cols, triplets).expect("valid product")
    }

    /// `self - other` entrywise.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((r, self.col_idx[k], self.vals[k]));
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                triplets.push((r, other.col_idx[k], -other.vals[k]));
            }
        }
        Self::from_triplets(self.rows, self.cols, triplets).expect("valid difference")
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.vals {
            *v *= s;
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[(r, self.col_idx[k])] = self.vals[k];
            }
        }
        d
    }
}

/// A linear map given by its action (and its adjoint's action). Composed
/// defect operators implement this without materializing a matrix.
pub trait LinOp {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
    fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>>;
}

impl LinOp for SparseOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(SparseOperator::apply(self, v))
    }

    fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_transpose(v))
    }
}

/// Linear map defined by a pair of closures.
pub struct FnOp<F, G>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    pub rows: usize,
    pub cols: usize,
    pub fwd: F,
    pub adj: G,
}

impl<F, G> LinOp for FnOp<F, G>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        (self.fwd)(v)
    }

    fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        (self.adj)(v)
    }
}

// Small vector helpers shared by the iterative kernels.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
