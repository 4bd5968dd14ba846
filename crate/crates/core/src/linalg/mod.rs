//! Compressed sparse rows, Kronecker assembly and the linear solvers used by
//! the implicit space-time systems.

mod gmres;
mod solver;

pub use gmres::{gmres, GmresOptions};
pub use solver::{solve, solve_with, JacobiPreconditioner, LinearSolver, Preconditioner, SolveMethod, SolveReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative residual tolerance for every solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-11;

/// Systems above this many unknowns are solved iteratively.
pub const DIRECT_LIMIT: usize = 50_000;

/// Finalized CSR matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triples; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::IndexOutOfRange { row: r, col: c, rows, cols });
            }
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols_tmp = vec![0usize; triplets.len()];
        let mut vals_tmp = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[r];
            cols_tmp[k] = c;
            vals_tmp[k] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..rows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols_tmp[k]);
            let mut last = usize::MAX;
            for &k in &order {
                if cols_tmp[k] == last {
                    *values.last_mut().unwrap() += vals_tmp[k];
                } else {
                    col_idx.push(cols_tmp[k]);
                    values.push(vals_tmp[k]);
                    last = cols_tmp[k];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
    }

    /// Keeps the exactly nonzero entries of a dense matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("indices come from the matrix shape")
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SparseMatrix {
            rows: d.len(),
            cols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored `(row, col, value)` entries in row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &t).expect("transposed indices stay in range")
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        SparseMatrix { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let t: Vec<_> = self.iter().chain(other.iter().map(|(r, c, v)| (r, c, s * v))).collect();
        Self::from_triplets(self.rows, self.cols, &t)
    }

    /// `diag(left) · self · diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for (r, l) in left.iter().enumerate().take(self.rows) {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] *= l * right[self.col_idx[k]];
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or_else(|| overflow(a, b))?;
    let cols = a.cols.checked_mul(b.cols).ok_or_else(|| overflow(a, b))?;
    let nnz = a.nnz().checked_mul(b.nnz()).ok_or_else(|| overflow(a, b))?;

    let mut row_ptr = Vec::with_capacity(rows + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for ra in 0..a.rows {
        for rb in 0..b.rows {
            for ka in a.row_ptr[ra]..a.row_ptr[ra + 1] {
                let (ca, va) = (a.col_idx[ka], a.values[ka]);
                for kb in b.row_ptr[rb]..b.row_ptr[rb + 1] {
                    col_idx.push(ca * b.cols + b.col_idx[kb]);
                    values.push(va * b.values[kb]);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
}

fn overflow(a: &SparseMatrix, b: &SparseMatrix) -> Error {
    Error::DimensionOverflow(format!("{}x{} ⊗ {}x{}", a.rows, a.cols, b.rows, b.cols))
}

/// `√(vᵀ H v)` for a positive diagonal `h`.
pub fn weighted_norm(h: &[f64], v: &[f64]) -> Result<f64> {
    if h.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), got: v.len() });
    }
    Ok(h.iter().zip(v).map(|(w, x)| w * x * x).sum::<f64>().sqrt())
}

/// Weighted inner product `uᵀ H v`.
pub fn weighted_dot(h: &[f64], u: &[f64], v: &[f64]) -> f64 {
    h.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
