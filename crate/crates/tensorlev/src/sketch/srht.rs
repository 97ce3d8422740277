//! Subsampled randomized Hadamard transforms. `SrhtSpec` is the plain
//! m-row sketch (1/√m)·P·H·D; `SharedSignSrhtFamily` holds q of them with one
//! shared sign vector so H·D·X is computed once for all members.

use rand::Rng;

use crate::error::{ensure_contract, Result};
use crate::mat::{next_pow2, DenseMatrix};
use crate::rng::RngStream;

/// In-place unnormalized Walsh-Hadamard transform; HᵀH = len·I.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    ensure_contract!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    Ok(())
}

fn rademacher(len: usize, stream: &RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..len).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// m distinct coordinates of [range], uniform without replacement.
fn sample_distinct(range: usize, m: usize, stream: &RngStream) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..range).collect();
    let mut rng = stream.rng();
    for i in 0..m {
        let j = rng.gen_range(i..range);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

#[derive(Debug, Clone)]
pub struct SrhtSpec {
    pub input_dim: usize,
    pub padded_dim: usize,
    pub output_dim: usize,
    signs: Vec<f64>,
    coords: Vec<usize>,
}

impl SrhtSpec {
    pub fn build(input_dim: usize, output_dim: usize, stream: &RngStream) -> Result<Self> {
        ensure_contract!(input_dim >= 1 && output_dim >= 1, "dimensions must be positive");
        let padded_dim = next_pow2(input_dim);
        ensure_contract!(
            output_dim <= padded_dim,
            "cannot sample {output_dim} distinct coordinates from {padded_dim}"
        );
        Ok(SrhtSpec {
            input_dim,
            padded_dim,
            output_dim,
            signs: rademacher(padded_dim, &stream.child(0)),
            coords: sample_distinct(padded_dim, output_dim, &stream.child(1)),
        })
    }

    /// Explicit sign vector and coordinate list, for pinned tests.
    pub fn from_parts(input_dim: usize, signs: Vec<f64>, coords: Vec<usize>) -> Result<Self> {
        let padded_dim = next_pow2(input_dim);
        ensure_contract!(signs.len() == padded_dim, "sign vector must have padded length");
        ensure_contract!(signs.iter().all(|&s| s == 1.0 || s == -1.0), "signs must be unit");
        ensure_contract!(
            coords.iter().all(|&c| c < padded_dim),
            "coordinates must lie in the padded range"
        );
        let mut seen = vec![false; padded_dim];
        for &c in &coords {
            ensure_contract!(!seen[c], "coordinate {c} repeated");
            seen[c] = true;
        }
        Ok(SrhtSpec { input_dim, padded_dim, output_dim: coords.len(), signs, coords })
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_contract!(
            x.len() == self.input_dim,
            "input length {} does not match {}",
            x.len(),
            self.input_dim
        );
        let mut buf = vec![0.0; self.padded_dim];
        for (i, &v) in x.iter().enumerate() {
            buf[i] = self.signs[i] * v;
        }
        fwht_inplace(&mut buf)?;
        let scale = 1.0 / (self.output_dim as f64).sqrt();
        Ok(self.coords.iter().map(|&c| buf[c] * scale).collect())
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_contract!(
            x.nrows() == self.input_dim,
            "matrix has {} rows, sketch expects {}",
            x.nrows(),
            self.input_dim
        );
        let mut out = DenseMatrix::zeros(self.output_dim, x.ncols());
        for l in 0..x.ncols() {
            let col: Vec<f64> = x.column(l).iter().copied().collect();
            let sketched = self.apply_vec(&col)?;
            for (r, val) in sketched.into_iter().enumerate() {
                out[(r, l)] = val;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SharedSignSrhtFamily {
    pub members: usize,
    pub input_dim: usize,
    pub padded_dim: usize,
    pub output_dim: usize,
    signs: Vec<f64>,
    coord_lists: Vec<Vec<usize>>,
}

impl SharedSignSrhtFamily {
    pub fn build(
        members: usize,
        input_dim: usize,
        output_dim: usize,
        stream: &RngStream,
    ) -> Result<Self> {
        ensure_contract!(members >= 1, "family needs at least one member");
        ensure_contract!(input_dim >= 1 && output_dim >= 1, "dimensions must be positive");
        let padded_dim = next_pow2(input_dim);
        ensure_contract!(
            output_dim <= padded_dim,
            "output dim {output_dim} exceeds padded input dim {padded_dim}"
        );
        let signs = rademacher(padded_dim, &stream.child(0));
        let coord_lists = (0..members)
            .map(|c| sample_distinct(padded_dim, output_dim, &stream.child(1 + c as u64)))
            .collect();
        Ok(SharedSignSrhtFamily {
            members,
            input_dim,
            padded_dim,
            output_dim,
            signs,
            coord_lists,
        })
    }

    pub fn member(&self, c: usize) -> Result<SrhtSpec> {
        ensure_contract!(c < self.members, "member index {c} out of range");
        SrhtSpec::from_parts(self.input_dim, self.signs.clone(), self.coord_lists[c].clone())
    }

    /// One H·D·X transform per column feeds every member's gather.
    pub fn apply_all(&self, x: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
        ensure_contract!(
            x.nrows() == self.input_dim,
            "matrix has {} rows, family expects {}",
            x.nrows(),
            self.input_dim
        );
        let scale = 1.0 / (self.output_dim as f64).sqrt();
        let mut outs = vec![DenseMatrix::zeros(self.output_dim, x.ncols()); self.members];
        let mut buf = vec![0.0; self.padded_dim];
        for l in 0..x.ncols() {
            buf.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..self.input_dim {
                buf[i] = self.signs[i] * x[(i, l)];
            }
            fwht_inplace(&mut buf)?;
            for (c, coords) in self.coord_lists.iter().enumerate() {
                for (r, &coord) in coords.iter().enumerate() {
                    outs[c][(r, l)] = buf[coord] * scale;
                }
            }
        }
        Ok(outs)
    }
}
