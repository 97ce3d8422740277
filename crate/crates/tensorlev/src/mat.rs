//! Matrix carriers and small dense linear-algebra helpers.
//!
//! Dense matrices are nalgebra `DMatrix<f64>` (column-major, which every
//! column-oriented loop in this crate relies on). [`SparseColMatrix`] is a
//! minimal compressed-column format used for input-sparsity accounting and
//! the LibSVM path; it converts to dense at desk scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_contract, Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Column-major sparse matrix: per column, (row, value) pairs sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColMatrix {
    pub rows: usize,
    pub cols: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseColMatrix {
    pub fn new(rows: usize, cols: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        ensure_contract!(columns.len() == cols, "expected {cols} columns, got {}", columns.len());
        for (c, col) in columns.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(i, v) in col {
                ensure_contract!(i < rows, "row index {i} out of bounds in column {c}");
                ensure_contract!(v != 0.0 && v.is_finite(), "stored value in column {c} must be finite and nonzero");
                ensure_contract!(prev.map_or(true, |p| i > p), "row indices not strictly increasing in column {c}");
                prev = Some(i);
            }
        }
        Ok(SparseColMatrix { rows, cols, columns })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let columns = (0..m.ncols())
            .map(|c| {
                (0..m.nrows())
                    .filter_map(|r| {
                        let v = m[(r, c)];
                        (v != 0.0).then_some((r, v))
                    })
                    .collect()
            })
            .collect();
        SparseColMatrix { rows: m.nrows(), cols: m.ncols(), columns }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn column(&self, c: usize) -> &[(usize, f64)] {
        &self.columns[c]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }
}

/// (K + shift·I)^(−1/2) for symmetric PSD `k`, by dense eigendecomposition.
/// Eigenvalues of `k` are clamped at zero so roundoff-negative values cannot
/// poison the square root; `shift` must keep the spectrum positive.
pub fn sym_inv_sqrt_shifted(k: &DenseMatrix, shift: f64) -> Result<DenseMatrix> {
    ensure_contract!(k.is_square(), "matrix must be square");
    ensure_contract!(shift > 0.0, "shift must be positive");
    let eig = k.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, ev) in eig.eigenvalues.iter().enumerate() {
        let s = 1.0 / (ev.max(0.0) + shift).sqrt();
        if !s.is_finite() {
            return Err(Error::numerical(format!("non-finite scaling for eigenvalue {ev}")));
        }
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Entrywise (Hadamard) j-th power; 0-th power is the all-ones matrix.
pub fn hadamard_pow(m: &DenseMatrix, j: usize) -> DenseMatrix {
    let mut out = DenseMatrix::repeat(m.nrows(), m.ncols(), 1.0);
    for _ in 0..j {
        out.component_mul_assign(m);
    }
    out
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// ceil(log2(n)) with n clamped to at least 2, so sketch sizes stay positive
/// on degenerate single-column inputs.
pub fn log2_ceil(n: usize) -> usize {
    let n = n.max(2);
    usize::BITS as usize - (n - 1).leading_zeros() as usize
}
