//! PolySketch: a complete binary tree with CountSketch leaves and degree-2
//! TensorSketch internal nodes. The root output sketches u₁ ⊗ … ⊗ u_q into m
//! dimensions, and the prefix sweep yields all q+1 sketches where a leading
//! block of factors is replaced by e₁, recomputing only O(log q) nodes per
//! step.

use crate::error::{ensure_contract, Result};
use crate::mat::next_pow2;
use crate::rng::RngStream;
use crate::sketch::count_sketch::CountSketchSpec;
use crate::sketch::tensor_sketch::TensorSketch2Spec;

#[derive(Debug, Clone)]
pub struct PolySketchTree {
    pub degree: usize,
    pub padded_degree: usize,
    pub dim: usize,
    /// Leaf j sketches factor j; leaves beyond `degree` pad with the
    /// one-dimensional vector [1].
    leaves: Vec<CountSketchSpec>,
    /// Internal nodes in heap order; node i combines heap children 2i+1, 2i+2.
    nodes: Vec<TensorSketch2Spec>,
    e1_sketches: Vec<Vec<f64>>,
}

impl PolySketchTree {
    pub fn build(factor_dims: &[usize], dim: usize, stream: &RngStream) -> Result<Self> {
        let degree = factor_dims.len();
        ensure_contract!(degree >= 1, "degree must be at least one");
        ensure_contract!(dim >= 1, "sketch dimension must be at least one");
        ensure_contract!(factor_dims.iter().all(|&d| d >= 1), "factor dims must be positive");
        let padded_degree = next_pow2(degree);
        let leaf_streams = stream.child(0);
        let node_streams = stream.child(1);
        let leaves: Vec<CountSketchSpec> = (0..padded_degree)
            .map(|j| {
                let input = if j < degree { factor_dims[j] } else { 1 };
                CountSketchSpec::build(input, dim, &leaf_streams.child(j as u64))
            })
            .collect();
        let nodes = (0..padded_degree.saturating_sub(1))
            .map(|i| TensorSketch2Spec::build(dim, &node_streams.child(i as u64)))
            .collect();
        let e1_sketches = leaves
            .iter()
            .map(|cs| cs.apply_sparse(&[(0, 1.0)]).expect("e1 sketch"))
            .collect();
        Ok(PolySketchTree { degree, padded_degree, dim, leaves, nodes, e1_sketches })
    }

    fn leaf_values(&self, factors: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        ensure_contract!(
            factors.len() == self.degree,
            "expected {} factors, got {}",
            self.degree,
            factors.len()
        );
        let mut vals = Vec::with_capacity(self.padded_degree);
        for (j, f) in factors.iter().enumerate() {
            vals.push(self.leaves[j].apply_dense(f)?);
        }
        for j in self.degree..self.padded_degree {
            vals.push(self.e1_sketches[j].clone());
        }
        Ok(vals)
    }

    /// Full heap of node values: internal nodes at 0..q̄−1, leaf j at q̄−1+j.
    fn combine(&self, leaf_vals: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let internal = self.padded_degree - 1;
        let mut heap = vec![Vec::new(); internal];
        heap.extend(leaf_vals);
        for i in (0..internal).rev() {
            heap[i] = self.nodes[i].apply(&heap[2 * i + 1], &heap[2 * i + 2])?;
        }
        Ok(heap)
    }

    pub fn apply_dense(&self, factors: &[&[f64]]) -> Result<Vec<f64>> {
        let mut heap = self.combine(self.leaf_values(factors)?)?;
        Ok(heap.swap_remove(0))
    }

    /// output[j] sketches e₁^{⊗j} ⊗ u_{j+1} ⊗ … ⊗ u_q for j = 0…q. Each step
    /// swaps one leaf for its e₁ sketch and recomputes only its ancestors, so
    /// every entry matches the from-scratch application bit-for-bit.
    pub fn prefix_sweep_dense(&self, factors: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let mut heap = self.combine(self.leaf_values(factors)?)?;
        let mut out = Vec::with_capacity(self.degree + 1);
        out.push(heap[0].clone());
        let internal = self.padded_degree - 1;
        for j in 0..self.degree {
            let mut idx = internal + j;
            heap[idx] = self.e1_sketches[j].clone();
            while idx > 0 {
                idx = (idx - 1) / 2;
                heap[idx] = self.nodes[idx].apply(&heap[2 * idx + 1], &heap[2 * idx + 2])?;
            }
            out.push(heap[0].clone());
        }
        Ok(out)
    }
}
