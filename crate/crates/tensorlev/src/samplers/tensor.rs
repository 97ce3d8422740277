//! Row norm sampler for Φ = X^(1) ⊗ … ⊗ X^(q) with q distinct datasets.
//!
//! One TensorNorm structure over (X^(1),…,X^(q),M) answers every level's
//! queries; bucket masses take the median over m' independently compressed
//! copies of the bucket rows, while within-bucket masses use a single query
//! per member.

use crate::error::{ensure_contract, Error, Result};
use crate::mat::{DenseMatrix, DenseVector};
use crate::rng::RngStream;
use crate::samplers::bucket::BucketHash;
use crate::samplers::engine::{
    build_bucket_compressions, diag_times_row, diag_times_transpose, run_level_loop,
    LevelLoopInputs,
};
use crate::samplers::rows::SampledRows;
use crate::samplers::{reg_inv_sqrt, SamplerConfig};
use crate::sketch::GaussianJlSpec;
use crate::tensor_norm::{lower_median, tnds_build};

pub fn row_sampler_tensor(
    xs: &[DenseMatrix],
    b: &DenseMatrix,
    lambda: f64,
    s: usize,
    cfg: &SamplerConfig,
    stream: &RngStream,
) -> Result<SampledRows> {
    ensure_contract!(!xs.is_empty(), "need at least one dataset");
    let (d, n) = (xs[0].nrows(), xs[0].ncols());
    ensure_contract!(d >= 1 && n >= 1, "datasets must be nonempty");
    for (a, x) in xs.iter().enumerate() {
        ensure_contract!(
            x.nrows() == d && x.ncols() == n,
            "dataset {a} must have shape {d}x{n}"
        );
    }
    ensure_contract!(s >= 1, "sample count must be positive");
    ensure_contract!(b.ncols() == n, "B must have {n} columns");
    let q = xs.len();
    let total_mass: f64 = (0..n)
        .map(|l| xs.iter().map(|x| x.column(l).norm_squared()).product::<f64>())
        .sum();
    if total_mass <= 0.0 {
        return Err(Error::contract("feature matrix is identically zero"));
    }

    let reg = reg_inv_sqrt(b, lambda)?;
    let d_prime = cfg.jl_dim(q as f64, n);
    let h = GaussianJlSpec::new(d_prime, n, stream.child(0))?
        .apply(&DenseMatrix::identity(n, n))?;
    let m_mat = reg.apply_right(&h)?;

    let eps = cfg.ds_eps_override.unwrap_or(1.0 / (20.0 * q as f64));
    let mut inputs: Vec<DenseMatrix> = xs.to_vec();
    inputs.push(m_mat);
    let ds = tnds_build(&inputs, eps, &cfg.ds, &stream.child(2))?;

    let hash = BucketHash::build(d, cfg.bucket_count((q * q) as f64, s), &stream.child(1))?;
    let medians = cfg.medians(n);
    let factor_refs: Vec<&DenseMatrix> = xs.iter().collect();
    let w = build_bucket_compressions(
        &factor_refs,
        &hash,
        cfg.deg1_dim(q),
        medians,
        &stream.child(4),
    )?;

    let bucket_masses = |diag: &DenseVector, level: usize, _block: usize| -> Result<Vec<f64>> {
        let mut masses = Vec::with_capacity(w.len());
        for per_k in &w {
            let vals = (0..medians)
                .map(|k| ds.query(&diag_times_transpose(diag, &per_k[k][level - 1]), level))
                .collect::<Result<Vec<f64>>>()?;
            masses.push(lower_median(vals));
        }
        Ok(masses)
    };
    let member_masses =
        |diag: &DenseVector, level: usize, _block: usize, members: &[usize]| -> Result<Vec<f64>> {
            members
                .iter()
                .map(|&i| ds.query(&diag_times_row(diag, &xs[level - 1], i), level))
                .collect()
        };

    let rows = run_level_loop(
        LevelLoopInputs {
            factors: factor_refs,
            bucket: &hash,
            init_diag: DenseVector::from_element(n, 1.0),
            blocks: vec![q; s],
            init_betas: vec![s as f64; s],
            init_flags: vec![false; s],
            streams: (0..s as u64).map(|l| stream.child(3).child(l)).collect(),
        },
        bucket_masses,
        member_masses,
    )?;
    SampledRows::new(rows, s)
}
