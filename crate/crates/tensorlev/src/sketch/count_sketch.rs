//! CountSketch: a single hash-and-sign bucketing map, the leaf sketch of the
//! PolySketch tree.

use rand::Rng;

use crate::error::{ensure_contract, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct CountSketchSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    hash: Vec<u32>,
    sign: Vec<f64>,
}

impl CountSketchSpec {
    pub fn build(input_dim: usize, output_dim: usize, stream: &RngStream) -> Self {
        let mut rng = stream.rng();
        let hash = (0..input_dim).map(|_| rng.gen_range(0..output_dim) as u32).collect();
        let sign = (0..input_dim)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        CountSketchSpec { input_dim, output_dim, hash, sign }
    }

    /// Fixed hash and sign tables, for tests that pin the map exactly.
    pub fn from_parts(hash: Vec<usize>, sign: Vec<f64>, output_dim: usize) -> Result<Self> {
        ensure_contract!(hash.len() == sign.len(), "hash and sign tables must align");
        ensure_contract!(
            hash.iter().all(|&b| b < output_dim),
            "hash buckets must be below the output dimension"
        );
        ensure_contract!(sign.iter().all(|&s| s == 1.0 || s == -1.0), "signs must be unit");
        Ok(CountSketchSpec {
            input_dim: hash.len(),
            output_dim,
            hash: hash.into_iter().map(|b| b as u32).collect(),
            sign,
        })
    }

    pub fn apply_dense(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_contract!(
            x.len() == self.input_dim,
            "input length {} does not match sketch input dimension {}",
            x.len(),
            self.input_dim
        );
        let mut out = vec![0.0; self.output_dim];
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                out[self.hash[i] as usize] += self.sign[i] * v;
            }
        }
        Ok(out)
    }

    /// nnz-time application; entries are (index, value) pairs.
    pub fn apply_sparse(&self, x: &[(usize, f64)]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim];
        for &(i, v) in x {
            ensure_contract!(i < self.input_dim, "sparse index {i} out of range");
            out[self.hash[i] as usize] += self.sign[i] * v;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn pinned_three_to_two_map() {
        let cs = CountSketchSpec::from_parts(vec![0, 1, 0], vec![1.0, -1.0, 1.0], 2).unwrap();
        assert_eq!(cs.apply_dense(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, -2.0]);
        assert_eq!(
            cs.apply_sparse(&[(0, 1.0), (1, 2.0), (2, 3.0)]).unwrap(),
            vec![4.0, -2.0]
        );
    }

    #[test]
    fn zero_maps_to_zero() {
        let cs = CountSketchSpec::build(16, 8, &RngStream::from_seed(3));
        assert_eq!(cs.apply_dense(&[0.0; 16]).unwrap(), vec![0.0; 8]);
        assert_eq!(cs.apply_sparse(&[]).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let cs = CountSketchSpec::build(4, 2, &RngStream::from_seed(4));
        assert!(cs.apply_dense(&[1.0; 5]).is_err());
        assert!(cs.apply_sparse(&[(4, 1.0)]).is_err());
    }

    #[test]
    fn mean_squared_norm_is_preserved() {
        let root = RngStream::from_seed(5);
        let mut rng = root.child(999).rng();
        let x: Vec<f64> = (0..16).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let exact: f64 = x.iter().map(|v| v * v).sum();
        let mut mean = 0.0;
        for seed in 0..10_000u64 {
            let cs = CountSketchSpec::build(16, 8, &root.child(seed));
            let y = cs.apply_dense(&x).unwrap();
            mean += y.iter().map(|v| v * v).sum::<f64>();
        }
        mean /= 10_000.0;
        assert!((mean - exact).abs() <= 0.02 * exact, "mean {mean} vs exact {exact}");
    }

    #[test]
    fn sparse_and_dense_agree() {
        let cs = CountSketchSpec::build(12, 6, &RngStream::from_seed(6));
        let mut x = vec![0.0; 12];
        x[2] = 1.5;
        x[7] = -0.25;
        x[11] = 3.0;
        let dense = cs.apply_dense(&x).unwrap();
        let sparse = cs.apply_sparse(&[(2, 1.5), (7, -0.25), (11, 3.0)]).unwrap();
        assert_eq!(dense, sparse);
    }

    #[test]
    fn linear_in_the_input() {
        let cs = CountSketchSpec::build(10, 4, &RngStream::from_seed(7));
        let mut rng = RngStream::from_seed(8).rng();
        let x: Vec<f64> = (0..10).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.gen::<f64>()).collect();
        let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let lhs = cs.apply_dense(&combo).unwrap();
        let sx = cs.apply_dense(&x).unwrap();
        let sy = cs.apply_dense(&y).unwrap();
        for i in 0..4 {
            let rhs = a * sx[i] + b * sy[i];
            assert!((lhs[i] - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }
}
