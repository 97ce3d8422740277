//! Descriptors for the implicit feature matrix Φ.
//!
//! Φ is never materialized outside the oracle; a descriptor carries the
//! datasets that define it plus the closed-form squared Frobenius norm the
//! recursive driver needs for its starting regularizer.

use crate::error::{ensure_contract, Result};
use crate::mat::{DenseMatrix, DenseVector};

#[derive(Debug, Clone)]
pub enum FeatureKind {
    /// Φ = X^(1) ⊗ … ⊗ X^(q), columnwise tensor product of q distinct d×n datasets.
    TensorProduct { datasets: Vec<DenseMatrix> },
    /// Φ = X^{⊗q}.
    SelfTensor { x: DenseMatrix, q: usize },
    /// Generalized polynomial kernel features: Φ = ⊕_{j=0}^q α_j·X^{⊗j}·diag(v).
    Gpk { x: DenseMatrix, v: DenseVector, alpha: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct FeatureDescriptor {
    kind: FeatureKind,
    frob_sq: f64,
}

impl FeatureDescriptor {
    pub fn tensor_product(datasets: Vec<DenseMatrix>) -> Result<Self> {
        ensure_contract!(!datasets.is_empty(), "need at least one dataset");
        let (d, n) = (datasets[0].nrows(), datasets[0].ncols());
        ensure_contract!(d > 0 && n > 0, "datasets must be nonempty");
        for x in &datasets {
            ensure_contract!(
                x.nrows() == d && x.ncols() == n,
                "all datasets must share the shape {d}x{n}"
            );
        }
        let frob_sq = (0..n)
            .map(|l| datasets.iter().map(|x| x.column(l).norm_squared()).product::<f64>())
            .sum();
        Ok(FeatureDescriptor { kind: FeatureKind::TensorProduct { datasets }, frob_sq })
    }

    pub fn self_tensor(x: DenseMatrix, q: usize) -> Result<Self> {
        ensure_contract!(q >= 1, "tensor degree must be at least 1");
        ensure_contract!(x.nrows() > 0 && x.ncols() > 0, "dataset must be nonempty");
        let frob_sq = (0..x.ncols()).map(|l| x.column(l).norm_squared().powi(q as i32)).sum();
        Ok(FeatureDescriptor { kind: FeatureKind::SelfTensor { x, q }, frob_sq })
    }

    pub fn gpk(x: DenseMatrix, v: DenseVector, alpha: Vec<f64>) -> Result<Self> {
        ensure_contract!(x.nrows() > 0 && x.ncols() > 0, "dataset must be nonempty");
        ensure_contract!(v.len() == x.ncols(), "v must have one entry per column");
        ensure_contract!(!alpha.is_empty(), "alpha must have q+1 entries");
        ensure_contract!(
            alpha.iter().all(|a| *a >= 0.0 && a.is_finite()),
            "alpha entries must be finite and nonnegative"
        );
        ensure_contract!(alpha.iter().any(|a| *a > 0.0), "at least one alpha entry must be positive");
        ensure_contract!(v.iter().all(|x| x.is_finite()), "v entries must be finite");
        let frob_sq = (0..x.ncols())
            .map(|l| {
                let norm_sq = x.column(l).norm_squared();
                let poly: f64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * a * norm_sq.powi(j as i32))
                    .sum();
                v[l] * v[l] * poly
            })
            .sum();
        Ok(FeatureDescriptor { kind: FeatureKind::Gpk { x, v, alpha }, frob_sq })
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    /// Exact ‖Φ‖_F², from the closed form cached at construction.
    pub fn frobenius_sq(&self) -> f64 {
        self.frob_sq
    }

    /// Number of columns n shared by Φ and every dataset.
    pub fn n_cols(&self) -> usize {
        match &self.kind {
            FeatureKind::TensorProduct { datasets } => datasets[0].ncols(),
            FeatureKind::SelfTensor { x, .. } | FeatureKind::Gpk { x, .. } => x.ncols(),
        }
    }

    /// Per-dataset row dimension d.
    pub fn dim(&self) -> usize {
        match &self.kind {
            FeatureKind::TensorProduct { datasets } => datasets[0].nrows(),
            FeatureKind::SelfTensor { x, .. } | FeatureKind::Gpk { x, .. } => x.nrows(),
        }
    }

    /// Tensor degree q (for GPK, the top block degree).
    pub fn degree(&self) -> usize {
        match &self.kind {
            FeatureKind::TensorProduct { datasets } => datasets.len(),
            FeatureKind::SelfTensor { q, .. } => *q,
            FeatureKind::Gpk { alpha, .. } => alpha.len() - 1,
        }
    }

    /// The dataset whose rows enter at level `a` (0-based) of a sampled
    /// multi-index. Self-tensor and GPK variants reuse the single dataset.
    pub fn factor(&self, a: usize) -> &DenseMatrix {
        match &self.kind {
            FeatureKind::TensorProduct { datasets } => &datasets[a],
            FeatureKind::SelfTensor { x, .. } | FeatureKind::Gpk { x, .. } => x,
        }
    }

    /// Total number of rows of the materialized Φ (d^q, or Σ_b d^b for GPK).
    pub fn phi_rows(&self) -> u128 {
        let d = self.dim() as u128;
        match &self.kind {
            FeatureKind::TensorProduct { .. } | FeatureKind::SelfTensor { .. } => {
                d.pow(self.degree() as u32)
            }
            FeatureKind::Gpk { alpha, .. } => (0..alpha.len()).map(|b| d.pow(b as u32)).sum(),
        }
    }
}
