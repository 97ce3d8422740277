//! TensorNorm data structure: T independent {SRHT ∘ PolySketch} compressions
//! of every prefix-replaced tensor product of the input factors. A query
//! median-aggregates ‖P_{i,j}·V‖²_F over repetitions to estimate
//! ‖(X^{(j+1)} ⊗ … ⊗ X^{(k)})·V‖²_F without materializing the tensor.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{ensure_contract, Error, Result};
use crate::mat::{next_pow2, DenseMatrix};
use crate::rng::RngStream;
use crate::sketch::{PolySketchTree, SrhtSpec};

const MAGIC: &[u8; 4] = b"TNDS";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct TnDsConfig {
    /// PolySketch width constant: m = ⌈c_polysketch · k / ε²⌉.
    pub c_polysketch: f64,
    pub polysketch_dim_min: usize,
    pub polysketch_dim_max: usize,
    /// Repetition floor: T = max(reps_min, ⌈2·log₂ n⌉) unless overridden.
    pub reps_min: usize,
    pub reps_override: Option<usize>,
    /// Outer SRHT rows: m' = ⌈40·log₂(1/ε)/ε²⌉ capped here and by the padded
    /// PolySketch dimension.
    pub srht_dim_cap: usize,
}

impl Default for TnDsConfig {
    fn default() -> Self {
        TnDsConfig {
            c_polysketch: 10.0,
            polysketch_dim_min: 16,
            polysketch_dim_max: 4096,
            reps_min: 5,
            reps_override: None,
            srht_dim_cap: 4096,
        }
    }
}

impl TnDsConfig {
    pub fn polysketch_dim(&self, factor_count: usize, eps: f64) -> usize {
        let raw = (self.c_polysketch * factor_count as f64 / (eps * eps)).ceil() as usize;
        raw.clamp(self.polysketch_dim_min, self.polysketch_dim_max)
    }

    pub fn reps(&self, n: usize) -> usize {
        if let Some(t) = self.reps_override {
            return t.max(1);
        }
        let from_n = (2.0 * (n as f64).log2()).ceil().max(0.0) as usize;
        self.reps_min.max(from_n).max(1)
    }

    pub fn srht_dim(&self, polysketch_dim: usize, eps: f64) -> usize {
        let raw = (40.0 * (1.0 / eps).log2().max(1.0) / (eps * eps)).ceil() as usize;
        raw.min(self.srht_dim_cap).min(next_pow2(polysketch_dim)).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct TensorNormDs {
    pub factor_count: usize,
    pub n: usize,
    pub reps: usize,
    pub polysketch_dim: usize,
    pub srht_dim: usize,
    pub eps: f64,
    /// p[i][j] is the m'×n compression of the j-prefix-replaced tensor.
    p: Vec<Vec<DenseMatrix>>,
}

pub fn tnds_build(
    inputs: &[DenseMatrix],
    eps: f64,
    cfg: &TnDsConfig,
    stream: &RngStream,
) -> Result<TensorNormDs> {
    ensure_contract!(!inputs.is_empty(), "need at least one factor matrix");
    ensure_contract!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1), got {eps}");
    let n = inputs[0].ncols();
    ensure_contract!(n >= 1, "factor matrices must have columns");
    for (t, x) in inputs.iter().enumerate() {
        ensure_contract!(
            x.ncols() == n,
            "factor {t} has {} columns, expected {n}",
            x.ncols()
        );
        ensure_contract!(x.nrows() >= 1, "factor {t} has no rows");
    }
    let k = inputs.len();
    let dims: Vec<usize> = inputs.iter().map(|x| x.nrows()).collect();
    let m = cfg.polysketch_dim(k, eps);
    let reps = cfg.reps(n);
    let m_out = cfg.srht_dim(m, eps);

    let tree_streams = stream.child(0);
    let srht_streams = stream.child(1);
    // Repetitions draw from index-keyed streams and are fully independent,
    // so the parallel map below is bitwise identical for any thread count.
    let p = (0..reps)
        .into_par_iter()
        .map(|i| {
            let tree = PolySketchTree::build(&dims, m, &tree_streams.child(i as u64))?;
            let srht = SrhtSpec::build(m, m_out, &srht_streams.child(i as u64))?;
            let mut col_buf: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
            let mut pre: Vec<DenseMatrix> = (0..=k).map(|_| DenseMatrix::zeros(m, n)).collect();
            for l in 0..n {
                for (t, x) in inputs.iter().enumerate() {
                    for r in 0..dims[t] {
                        col_buf[t][r] = x[(r, l)];
                    }
                }
                let refs: Vec<&[f64]> = col_buf.iter().map(|c| c.as_slice()).collect();
                let sweep = tree.prefix_sweep_dense(&refs)?;
                for (j, vec) in sweep.into_iter().enumerate() {
                    for (r, val) in vec.into_iter().enumerate() {
                        pre[j][(r, l)] = val;
                    }
                }
            }
            let mut rep = Vec::with_capacity(k + 1);
            for mat in &pre {
                let compressed = srht.apply(mat)?;
                if compressed.iter().any(|v| !v.is_finite()) {
                    return Err(Error::numerical("non-finite entry in compressed tensor sketch"));
                }
                rep.push(compressed);
            }
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorNormDs {
        factor_count: k,
        n,
        reps,
        polysketch_dim: m,
        srht_dim: m_out,
        eps,
        p,
    })
}

pub(crate) fn lower_median(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    vals[(vals.len() - 1) / 2]
}

impl TensorNormDs {
    /// Median over repetitions of ‖P_{i,j}·V‖²_F. Zero columns of V are
    /// skipped, so the cost is O(reps · m' · nnz(V)) plus the scan.
    pub fn query(&self, v: &DenseMatrix, j: usize) -> Result<f64> {
        ensure_contract!(
            j <= self.factor_count,
            "prefix index {j} exceeds factor count {}",
            self.factor_count
        );
        ensure_contract!(
            v.nrows() == self.n,
            "query matrix has {} rows, expected {}",
            v.nrows(),
            self.n
        );
        let mut nonzero: Vec<Vec<(usize, f64)>> = Vec::new();
        for c in 0..v.ncols() {
            let mut col = Vec::new();
            for r in 0..self.n {
                let val = v[(r, c)];
                if val != 0.0 {
                    col.push((r, val));
                }
            }
            if !col.is_empty() {
                nonzero.push(col);
            }
        }
        let mut per_rep = Vec::with_capacity(self.reps);
        let mut acc = vec![0.0; self.srht_dim];
        for i in 0..self.reps {
            let mat = &self.p[i][j];
            let mut total = 0.0;
            for col in &nonzero {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for &(r, val) in col {
                    for out_row in 0..self.srht_dim {
                        acc[out_row] += mat[(out_row, r)] * val;
                    }
                }
                total += acc.iter().map(|a| a * a).sum::<f64>();
            }
            per_rep.push(total);
        }
        Ok(lower_median(per_rep))
    }

    pub fn compressed(&self, rep: usize, j: usize) -> &DenseMatrix {
        &self.p[rep][j]
    }

    pub fn stored_bytes(&self) -> usize {
        self.reps * (self.factor_count + 1) * self.srht_dim * self.n * 8
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::data(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        let io = |e: std::io::Error| Error::data(format!("write failed: {e}"));
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        for val in [
            self.factor_count as u64,
            self.n as u64,
            self.reps as u64,
            self.polysketch_dim as u64,
            self.srht_dim as u64,
        ] {
            w.write_all(&val.to_le_bytes()).map_err(io)?;
        }
        w.write_all(&self.eps.to_le_bytes()).map_err(io)?;
        for rep in &self.p {
            for mat in rep {
                for val in mat.iter() {
                    w.write_all(&val.to_le_bytes()).map_err(io)?;
                }
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
        let mut r = BufReader::new(file);
        let io = |e: std::io::Error| Error::data(format!("read failed: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::data("not a TensorNorm snapshot (bad magic)"));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(io)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::data(format!("unsupported snapshot version {version}")));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
            r.read_exact(&mut u64buf).map_err(io)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let factor_count = read_u64(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        let reps = read_u64(&mut r)? as usize;
        let polysketch_dim = read_u64(&mut r)? as usize;
        let srht_dim = read_u64(&mut r)? as usize;
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf).map_err(io)?;
        let eps = f64::from_le_bytes(f64buf);
        ensure_contract!(
            reps >= 1 && n >= 1 && srht_dim >= 1,
            "snapshot header has empty dimensions"
        );
        let mut p = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut rep = Vec::with_capacity(factor_count + 1);
            for _ in 0..=factor_count {
                let mut mat = DenseMatrix::zeros(srht_dim, n);
                for val in mat.iter_mut() {
                    r.read_exact(&mut f64buf).map_err(io)?;
                    *val = f64::from_le_bytes(f64buf);
                }
                rep.push(mat);
            }
            p.push(rep);
        }
        Ok(TensorNormDs { factor_count, n, reps, polysketch_dim, srht_dim, eps, p })
    }
}
