//! Sparse matrices and the SPD solver used throughout.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

/// Square compressed-sparse-row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed
    /// in input order.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) out of bounds for n = {n}");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            // stable sort keeps the summation order of duplicates fixed
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    /// Builds a matrix from a fixed sparsity pattern and values.
    pub fn from_parts(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(col_idx.len(), values.len());
        Self { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates over the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let row = |i: usize| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>();
        if self.n >= 4096 {
            par::map_indexed(self.n, row)
        } else {
            (0..self.n).map(row).collect()
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// Principal submatrix on `keep` (global indices, in the order given).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (l, &g) in keep.iter().enumerate() {
            local[g] = l;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &g in keep {
            let mut row: Vec<(usize, f64)> = self
                .row(g)
                .filter_map(|(j, v)| (local[j] != usize::MAX).then_some((local[j], v)))
                .collect();
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: keep.len(), row_ptr, col_idx, values }
    }

    /// `alpha * self + diag(beta * d)`; the pattern must already contain the diagonal.
    pub fn scaled_plus_diag(&self, alpha: f64, beta: f64, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= alpha;
                if self.col_idx[k] == i {
                    out.values[k] += beta * d[i];
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    fn to_faer_lower(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz() / 2 + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j <= i {
                    t.push(Triplet::new(i, j, v));
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Sparse Cholesky factorisation of a symmetric positive definite matrix.
pub struct SpdSolver {
    n: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdSolver").field("n", &self.n).finish()
    }
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        let lower = a.to_faer_lower()?;
        let sym = SymbolicLlt::try_new(lower.symbolic(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, lower.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ w_i a_i b_i`.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
