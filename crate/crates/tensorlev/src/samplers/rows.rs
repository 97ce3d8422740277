//! Sampler output: s rows of an implicit sampling matrix.
//!
//! Each entry names one row of Φ by (block, multi-index) and carries the
//! importance weight β^(−1/2) together with the realized sampling
//! probability β/s. Materialization rebuilds the actual s×n sketch rows as
//! weighted Hadamard products of dataset rows, never touching Φ itself.

use serde::Serialize;

use crate::error::{ensure_contract, Result};
use crate::features::{FeatureDescriptor, FeatureKind};
use crate::mat::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledRow {
    /// Degree of the feature block this row lives in; always q outside GPK.
    pub block: usize,
    /// Tensor position (i₁,…,i_b), one dataset row per level.
    pub indices: Vec<u32>,
    /// β^(−1/2), the multiplier that makes sampling unbiased.
    pub weight: f64,
    /// β/s, the probability this particular row was drawn.
    pub prob: f64,
    /// True when a zero-mass level forced a uniform fallback draw.
    pub fallback: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledRows {
    pub rows: Vec<SampledRow>,
    /// The requested sample count s; rows.len() == s.
    pub sample_count: usize,
}

impl SampledRows {
    pub fn new(rows: Vec<SampledRow>, sample_count: usize) -> Result<Self> {
        ensure_contract!(rows.len() == sample_count, "expected {sample_count} rows");
        for (l, row) in rows.iter().enumerate() {
            ensure_contract!(
                row.weight.is_finite() && row.weight > 0.0,
                "row {l} has weight {}",
                row.weight
            );
            ensure_contract!(
                row.prob > 0.0 && row.prob <= 1.0 + 1e-12,
                "row {l} has probability {}",
                row.prob
            );
            ensure_contract!(row.indices.len() == row.block, "row {l} index arity mismatch");
            let link = row.weight * row.weight * sample_count as f64 * row.prob;
            ensure_contract!(
                (link - 1.0).abs() <= 1e-12,
                "row {l} breaks weight²·s·prob = 1: got {link}"
            );
        }
        Ok(SampledRows { rows, sample_count })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Realizes Π·Φ: row ℓ is weight_ℓ·α_b·(X^(1)_{i₁,⋆} ∘ … ∘ X^(b)_{i_b,⋆}) ∘ v,
/// with α ≡ 1 and v ≡ 1 outside GPK. Costs O(s·q·n).
pub fn materialize_sampled_rows(
    rows: &SampledRows,
    desc: &FeatureDescriptor,
) -> Result<DenseMatrix> {
    let n = desc.n_cols();
    let d = desc.dim();
    let q = desc.degree();
    let mut out = DenseMatrix::zeros(rows.len(), n);
    let mut buf = vec![0.0f64; n];
    for (l, row) in rows.rows.iter().enumerate() {
        match desc.kind() {
            FeatureKind::Gpk { v, alpha, .. } => {
                ensure_contract!(row.block <= q, "row {l} block {} exceeds degree {q}", row.block);
                let a = alpha[row.block];
                for c in 0..n {
                    buf[c] = a * v[c];
                }
            }
            _ => {
                ensure_contract!(
                    row.block == q,
                    "row {l} block {} does not match degree {q}",
                    row.block
                );
                buf.iter_mut().for_each(|b| *b = 1.0);
            }
        }
        for (a, &i) in row.indices.iter().enumerate() {
            ensure_contract!((i as usize) < d, "row {l} index {i} out of range {d}");
            let x = desc.factor(a);
            for c in 0..n {
                buf[c] *= x[(i as usize, c)];
            }
        }
        for c in 0..n {
            out[(l, c)] = row.weight * buf[c];
        }
    }
    Ok(out)
}
