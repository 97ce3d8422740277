//! Row norm sampler for Φ = X^{⊗q}.
//!
//! Differs from the distinct-dataset sampler in two ways: the dataset is
//! first passed through m' shared-sign SRHT families (one TensorNorm
//! structure per family, each over (S_k^(1)X,…,S_k^(q)X, M)), and both the
//! bucket and the within-bucket masses take medians across those m'
//! structures.

use crate::error::{ensure_contract, Error, Result};
use crate::mat::{next_pow2, DenseMatrix, DenseVector};
use crate::rng::RngStream;
use crate::samplers::bucket::BucketHash;
use crate::samplers::engine::{
    build_bucket_compressions, diag_times_row, diag_times_transpose, run_level_loop,
    LevelLoopInputs,
};
use crate::samplers::rows::SampledRows;
use crate::samplers::{reg_inv_sqrt, SamplerConfig};
use crate::sketch::{GaussianJlSpec, SharedSignSrhtFamily};
use crate::tensor_norm::{lower_median, tnds_build, TensorNormDs};

/// Shared by the self-tensor and GPK samplers: M, the bucket hash, the
/// per-bucket compressions, and one TensorNorm structure per median copy.
pub(crate) struct SketchedSelfTensor {
    pub structures: Vec<TensorNormDs>,
    pub hash: BucketHash,
    pub w: Vec<Vec<Vec<DenseMatrix>>>,
    pub medians: usize,
}

pub(crate) fn build_sketched_selftensor(
    x: &DenseMatrix,
    q: usize,
    b: &DenseMatrix,
    lambda: f64,
    s: usize,
    cfg: &SamplerConfig,
    stream: &RngStream,
) -> Result<SketchedSelfTensor> {
    let (d, n) = (x.nrows(), x.ncols());
    let reg = reg_inv_sqrt(b, lambda)?;
    let d_prime = cfg.jl_dim((q * q) as f64, n);
    let h = GaussianJlSpec::new(d_prime, n, stream.child(0))?
        .apply(&DenseMatrix::identity(n, n))?;
    let m_mat = reg.apply_right(&h)?;

    let medians = cfg.medians(n);
    let qf = q as f64;
    let padded = next_pow2(d);
    let mut srht_rows = (cfg.c_srht_rows * (qf.powi(3) + qf * qf * reg.kappa) * (n as f64).log2())
        .ceil()
        .max(1.0) as usize;
    if srht_rows > padded {
        log::warn!(
            "shared-sign SRHT rows {srht_rows} exceed padded dimension {padded}; clamping"
        );
        srht_rows = padded;
    }

    let eps = cfg.ds_eps_override.unwrap_or(1.0 / (40.0 * qf.max(1.0)));
    let mut structures = Vec::with_capacity(medians);
    for k in 0..medians {
        let mut inputs: Vec<DenseMatrix> = if q > 0 {
            let family =
                SharedSignSrhtFamily::build(q, d, srht_rows, &stream.child(5).child(k as u64))?;
            family.apply_all(x)?
        } else {
            Vec::new()
        };
        inputs.push(m_mat.clone());
        structures.push(tnds_build(&inputs, eps, &cfg.ds, &stream.child(2).child(k as u64))?);
    }

    let hash = BucketHash::build(
        d,
        cfg.bucket_count((q * q * q).max(1) as f64, s),
        &stream.child(1),
    )?;
    let w = if q > 0 {
        build_bucket_compressions(&[x], &hash, cfg.deg1_dim(q), medians, &stream.child(4))?
    } else {
        Vec::new()
    };
    Ok(SketchedSelfTensor { structures, hash, w, medians })
}

impl SketchedSelfTensor {
    /// Median across the m' structures of the bucket mass estimates at the
    /// given query prefix, in nonempty-bucket order.
    pub fn bucket_masses(&self, diag: &DenseVector, prefix: usize) -> Result<Vec<f64>> {
        let mut masses = Vec::with_capacity(self.w.len());
        for per_k in &self.w {
            let vals = (0..self.medians)
                .map(|k| {
                    self.structures[k].query(&diag_times_transpose(diag, &per_k[k][0]), prefix)
                })
                .collect::<Result<Vec<f64>>>()?;
            masses.push(lower_median(vals));
        }
        Ok(masses)
    }

    pub fn member_masses(
        &self,
        x: &DenseMatrix,
        diag: &DenseVector,
        prefix: usize,
        members: &[usize],
    ) -> Result<Vec<f64>> {
        members
            .iter()
            .map(|&i| {
                let v = diag_times_row(diag, x, i);
                let vals = (0..self.medians)
                    .map(|k| self.structures[k].query(&v, prefix))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(lower_median(vals))
            })
            .collect()
    }
}

pub fn row_sampler_selftensor(
    x: &DenseMatrix,
    q: usize,
    b: &DenseMatrix,
    lambda: f64,
    s: usize,
    cfg: &SamplerConfig,
    stream: &RngStream,
) -> Result<SampledRows> {
    let (d, n) = (x.nrows(), x.ncols());
    ensure_contract!(d >= 1 && n >= 1, "dataset must be nonempty");
    ensure_contract!(q >= 1, "tensor degree must be at least 1");
    ensure_contract!(s >= 1, "sample count must be positive");
    ensure_contract!(b.ncols() == n, "B must have {n} columns");
    let total_mass: f64 = (0..n).map(|l| x.column(l).norm_squared().powi(q as i32)).sum();
    if total_mass <= 0.0 {
        return Err(Error::contract("feature matrix is identically zero"));
    }

    let sk = build_sketched_selftensor(x, q, b, lambda, s, cfg, stream)?;
    let rows = run_level_loop(
        LevelLoopInputs {
            factors: vec![x; q],
            bucket: &sk.hash,
            init_diag: DenseVector::from_element(n, 1.0),
            blocks: vec![q; s],
            init_betas: vec![s as f64; s],
            init_flags: vec![false; s],
            streams: (0..s as u64).map(|l| stream.child(3).child(l)).collect(),
        },
        |diag, level, _| sk.bucket_masses(diag, level),
        |diag, level, _, members| sk.member_masses(x, diag, level, members),
    )?;
    SampledRows::new(rows, s)
}
