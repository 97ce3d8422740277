//! Brute-force ground truth at desk scale.
//!
//! Everything here is deliberately naive: materialize Φ row by row, run dense
//! eigendecompositions, sum things directly. The randomized modules are
//! tested against these oracles; nothing in here may approximate.

use crate::error::{ensure_contract, Error, Result};
use crate::features::{FeatureDescriptor, FeatureKind};
use crate::mat::{hadamard_pow, sym_inv_sqrt_shifted, DenseMatrix};

/// Hard cap on materialized entries (rows·cols). Exceeding it is an error,
/// never a truncation.
pub const DEFAULT_PHI_ENTRY_CAP: usize = 1 << 22;

/// One degree block of a materialized Φ: GPK features have one block per
/// degree 0…q; plain tensor products have a single block of degree q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiBlock {
    pub degree: usize,
    pub row_offset: usize,
    pub rows: usize,
}

/// Dense Φ together with the codec between flat row numbers and
/// (block, multi-index) pairs. Multi-indices flatten row-major with i₁ most
/// significant; GPK blocks are laid out by ascending degree, so block b
/// starts at offset (d^b − 1)/(d − 1) = Σ_{j<b} d^j.
#[derive(Debug, Clone)]
pub struct MaterializedPhi {
    pub mat: DenseMatrix,
    pub blocks: Vec<PhiBlock>,
    pub dim: usize,
}

impl MaterializedPhi {
    pub fn flat_row_index(&self, block: usize, indices: &[usize]) -> Result<usize> {
        let info = self
            .blocks
            .iter()
            .find(|b| b.degree == block)
            .ok_or_else(|| Error::contract(format!("no block of degree {block}")))?;
        ensure_contract!(indices.len() == block, "multi-index length must equal block degree");
        let mut flat = 0usize;
        for &i in indices {
            ensure_contract!(i < self.dim, "index {i} out of range for dimension {}", self.dim);
            flat = flat * self.dim + i;
        }
        Ok(info.row_offset + flat)
    }

    pub fn decode_row(&self, flat: usize) -> Result<(usize, Vec<usize>)> {
        let info = self
            .blocks
            .iter()
            .find(|b| flat >= b.row_offset && flat < b.row_offset + b.rows)
            .ok_or_else(|| Error::contract(format!("row {flat} out of range")))?;
        let mut rem = flat - info.row_offset;
        let mut indices = vec![0usize; info.degree];
        for a in (0..info.degree).rev() {
            indices[a] = rem % self.dim;
            rem /= self.dim;
        }
        Ok((info.degree, indices))
    }
}

/// Materializes Φ exactly. Fails (rather than truncating) past `entry_cap`
/// total entries; use [`DEFAULT_PHI_ENTRY_CAP`] unless a test needs tighter.
pub fn materialize_phi(desc: &FeatureDescriptor, entry_cap: usize) -> Result<MaterializedPhi> {
    let n = desc.n_cols();
    let d = desc.dim();
    let total_rows = desc.phi_rows();
    let entries = total_rows.saturating_mul(n as u128);
    ensure_contract!(
        entries <= entry_cap as u128,
        "materialization of {entries} entries exceeds cap {entry_cap}"
    );
    let total_rows = total_rows as usize;

    let block_degrees: Vec<usize> = match desc.kind() {
        FeatureKind::TensorProduct { .. } | FeatureKind::SelfTensor { .. } => vec![desc.degree()],
        FeatureKind::Gpk { alpha, .. } => (0..alpha.len()).collect(),
    };

    let mut mat = DenseMatrix::zeros(total_rows, n);
    let mut blocks = Vec::with_capacity(block_degrees.len());
    let mut offset = 0usize;
    let mut scratch = vec![0.0f64; n];
    for &b in &block_degrees {
        let rows = d.pow(b as u32);
        blocks.push(PhiBlock { degree: b, row_offset: offset, rows });
        let mut indices = vec![0usize; b];
        for r in 0..rows {
            // decode r into the multi-index, i1 most significant
            let mut rem = r;
            for a in (0..b).rev() {
                indices[a] = rem % d;
                rem /= d;
            }
            match desc.kind() {
                FeatureKind::Gpk { v, alpha, .. } => {
                    let ab = alpha[b];
                    for l in 0..n {
                        scratch[l] = ab * v[l];
                    }
                }
                _ => scratch.iter_mut().for_each(|s| *s = 1.0),
            }
            for (a, &i) in indices.iter().enumerate() {
                let x = desc.factor(a);
                for l in 0..n {
                    scratch[l] *= x[(i, l)];
                }
            }
            for l in 0..n {
                mat[(offset + r, l)] = scratch[l];
            }
        }
        offset += rows;
    }
    Ok(MaterializedPhi { mat, blocks, dim: d })
}

/// Exact ridge leverage scores ℓ_i = ‖Φ_{i,⋆}(ΦᵀΦ+λI)^(−1/2)‖² for every row.
pub fn exact_ridge_leverage_scores(phi: &MaterializedPhi, lambda: f64) -> Result<Vec<f64>> {
    ensure_contract!(lambda > 0.0, "lambda must be positive");
    let gram = phi.mat.transpose() * &phi.mat;
    let eig = gram.symmetric_eigen();
    let rotated = &phi.mat * &eig.eigenvectors;
    let scores = (0..rotated.nrows())
        .map(|i| {
            rotated
                .row(i)
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(a, ev)| a * a / (ev.max(0.0) + lambda))
                .sum()
        })
        .collect();
    Ok(scores)
}

/// Exact Gram matrix K = ΦᵀΦ without materializing Φ. Tensor-product Grams
/// multiply entrywise: (⊗_a X^(a))ᵀ(⊗_a X^(a)) = ∘_a (X^(a)ᵀX^(a)), and GPK
/// blocks add up as Hadamard powers wrapped in diag(v).
pub fn exact_gram(desc: &FeatureDescriptor) -> DenseMatrix {
    let n = desc.n_cols();
    match desc.kind() {
        FeatureKind::TensorProduct { datasets } => {
            let mut k = DenseMatrix::from_element(n, n, 1.0);
            for x in datasets {
                k.component_mul_assign(&(x.transpose() * x));
            }
            k
        }
        FeatureKind::SelfTensor { x, q } => hadamard_pow(&(x.transpose() * x), *q),
        FeatureKind::Gpk { x, v, alpha } => {
            let gram = x.transpose() * x;
            let mut acc = DenseMatrix::zeros(n, n);
            let mut power = DenseMatrix::from_element(n, n, 1.0);
            for (j, &aj) in alpha.iter().enumerate() {
                if j > 0 {
                    power.component_mul_assign(&gram);
                }
                if aj != 0.0 {
                    acc += &power * (aj * aj);
                }
            }
            DenseMatrix::from_fn(n, n, |i, j| v[i] * acc[(i, j)] * v[j])
        }
    }
}

/// Normalized squared row norms of Φ·(BᵀB+λI)^(−1/2): the distribution a row
/// norm sampler must dominate by 1/4 (up to sampling error).
pub fn exact_row_norm_distribution(
    phi: &MaterializedPhi,
    b: &DenseMatrix,
    lambda: f64,
) -> Result<Vec<f64>> {
    ensure_contract!(lambda > 0.0, "lambda must be positive");
    ensure_contract!(b.ncols() == phi.mat.ncols(), "B must share Φ's column count");
    let reg = sym_inv_sqrt_shifted(&(b.transpose() * b), lambda)?;
    let rotated = &phi.mat * reg;
    let norms: Vec<f64> = (0..rotated.nrows()).map(|i| rotated.row(i).norm_squared()).collect();
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return Err(Error::contract("all rows of the rotated matrix have zero norm"));
    }
    Ok(norms.into_iter().map(|v| v / total).collect())
}

/// Total-variation distance (1/2)·Σ|p_i − q_i| between two distributions.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    ensure_contract!(p.len() == q.len(), "length mismatch: {} vs {}", p.len(), q.len());
    for (label, dist) in [("p", p), ("q", q)] {
        let sum: f64 = dist.iter().sum();
        ensure_contract!((sum - 1.0).abs() <= 1e-9, "{label} is not normalized (sum {sum})");
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
