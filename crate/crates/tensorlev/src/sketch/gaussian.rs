//! Seeded Gaussian JL map. Rows are regenerated from the stream on every
//! application, so the d'×n matrix is never stored. Deliberately not scaled
//! by 1/√d': downstream probability ratios normalize it away.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_contract, Result};
use crate::mat::DenseMatrix;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct GaussianJlSpec {
    pub output_dim: usize,
    pub input_dim: usize,
    stream: RngStream,
}

impl GaussianJlSpec {
    pub fn new(output_dim: usize, input_dim: usize, stream: RngStream) -> Result<Self> {
        ensure_contract!(output_dim >= 1 && input_dim >= 1, "dimensions must be positive");
        Ok(GaussianJlSpec { output_dim, input_dim, stream })
    }

    pub fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_contract!(
            a.nrows() == self.input_dim,
            "matrix has {} rows, map expects {}",
            a.nrows(),
            self.input_dim
        );
        let mut out = DenseMatrix::zeros(self.output_dim, a.ncols());
        let mut row = vec![0.0; self.input_dim];
        for r in 0..self.output_dim {
            let mut rng = self.stream.child(r as u64).rng();
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for c in 0..a.ncols() {
                let mut acc = 0.0;
                for (i, &h) in row.iter().enumerate() {
                    acc += h * a[(i, c)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }
}
