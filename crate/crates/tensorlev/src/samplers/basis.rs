//! Factored form of (BᵀB+λI)^(−1/2) for a short, wide B.
//!
//! B has at most s rows, so a thin SVD costs O(s²n) and right-multiplication
//! by the regularized inverse square root never forms an n×n matrix:
//! M·(BᵀB+λI)^(−1/2) = λ^(−1/2)·M + (M·V)·diag((σ²+λ)^(−1/2) − λ^(−1/2))·Vᵀ.

use crate::error::{ensure_contract, Error, Result};
use crate::mat::{DenseMatrix, DenseVector};

#[derive(Debug, Clone)]
pub struct RegularizedBasis {
    pub lambda: f64,
    /// √(‖BᵀB‖/λ + 1), from the exact largest singular value of B.
    pub kappa: f64,
    n: usize,
    /// Right singular vectors of B, n×rank.
    right_vectors: DenseMatrix,
    singular_values: DenseVector,
}

pub fn reg_inv_sqrt(b: &DenseMatrix, lambda: f64) -> Result<RegularizedBasis> {
    ensure_contract!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive, got {lambda}");
    ensure_contract!(b.nrows() >= 1 && b.ncols() >= 1, "B must be nonempty");
    ensure_contract!(b.iter().all(|v| v.is_finite()), "B has non-finite entries");
    let svd = b.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::numerical("SVD did not return right vectors"))?;
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    Ok(RegularizedBasis {
        lambda,
        kappa: (sigma_max * sigma_max / lambda + 1.0).sqrt(),
        n: b.ncols(),
        right_vectors: v_t.transpose(),
        singular_values: svd.singular_values,
    })
}

impl RegularizedBasis {
    /// M·(BᵀB+λI)^(−1/2) for any M with n columns.
    pub fn apply_right(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_contract!(
            m.ncols() == self.n,
            "matrix has {} columns, basis expects {}",
            m.ncols(),
            self.n
        );
        let base = 1.0 / self.lambda.sqrt();
        let mv = m * &self.right_vectors;
        let mut scaled = mv;
        for (c, sigma) in self.singular_values.iter().enumerate() {
            let coef = 1.0 / (sigma * sigma + self.lambda).sqrt() - base;
            scaled.column_mut(c).scale_mut(coef);
        }
        Ok(m * base + scaled * self.right_vectors.transpose())
    }
}
