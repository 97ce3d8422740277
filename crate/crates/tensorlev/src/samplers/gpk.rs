//! Row norm sampler for the direct-sum feature matrix
//! Φ = ⊕_{j=0}^q α_j·X^{⊗j}·diag(v).
//!
//! Reuses the self-tensor sketching stack. Each sample first draws its block
//! degree b from f_j ∝ α_j²·(estimated block mass), then runs b levels with
//! D¹ = diag(v); queries sit at prefix a+q−b so that exactly b−a dataset
//! copies remain active, and β starts at s·f_b.

use crate::error::{ensure_contract, Error, Result};
use crate::mat::{DenseMatrix, DenseVector};
use crate::rng::RngStream;
use crate::samplers::engine::{draw_categorical, run_level_loop, LevelLoopInputs};
use crate::samplers::rows::SampledRows;
use crate::samplers::selftensor::build_sketched_selftensor;
use crate::samplers::SamplerConfig;
use crate::tensor_norm::lower_median;

pub fn row_sampler_gpk(
    x: &DenseMatrix,
    v: &DenseVector,
    alpha: &[f64],
    b: &DenseMatrix,
    lambda: f64,
    s: usize,
    cfg: &SamplerConfig,
    stream: &RngStream,
) -> Result<SampledRows> {
    let (d, n) = (x.nrows(), x.ncols());
    ensure_contract!(d >= 1 && n >= 1, "dataset must be nonempty");
    ensure_contract!(!alpha.is_empty(), "alpha must have q+1 entries");
    ensure_contract!(
        alpha.iter().all(|a| *a >= 0.0 && a.is_finite()),
        "alpha entries must be finite and nonnegative"
    );
    ensure_contract!(alpha.iter().any(|a| *a > 0.0), "at least one alpha entry must be positive");
    ensure_contract!(v.len() == n, "v must have one entry per column");
    ensure_contract!(v.iter().all(|c| c.is_finite()), "v entries must be finite");
    ensure_contract!(s >= 1, "sample count must be positive");
    ensure_contract!(b.ncols() == n, "B must have {n} columns");
    let q = alpha.len() - 1;
    let total_mass: f64 = (0..n)
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
    if total_mass <= 0.0 {
        return Err(Error::contract("feature matrix is identically zero"));
    }

    let sk = build_sketched_selftensor(x, q, b, lambda, s, cfg, stream)?;

    // Block-degree masses f_j ∝ α_j²·(estimated mass of X^{⊗j}·diag(v)·Mᵀ).
    let v_mat = DenseMatrix::from_fn(n, 1, |l, _| v[l]);
    let mut f = vec![0.0f64; q + 1];
    for (j, &aj) in alpha.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        let vals = (0..sk.medians)
            .map(|k| sk.structures[k].query(&v_mat, q - j))
            .collect::<Result<Vec<f64>>>()?;
        f[j] = aj * aj * lower_median(vals);
    }
    let f_total: f64 = f.iter().sum();
    let positive_alpha: Vec<usize> =
        (0..=q).filter(|&j| alpha[j] > 0.0).collect();

    let mut blocks = Vec::with_capacity(s);
    let mut init_betas = Vec::with_capacity(s);
    let mut init_flags = Vec::with_capacity(s);
    let streams: Vec<RngStream> = (0..s as u64).map(|l| stream.child(3).child(l)).collect();
    for sample_stream in &streams {
        let mut rng = sample_stream.child(0).rng();
        let (block, f_b, flagged) = match draw_categorical(&f, &mut rng) {
            Some((j, p)) => (j, p, false),
            None => {
                use rand::Rng;
                let j = positive_alpha[rng.gen_range(0..positive_alpha.len())];
                (j, 1.0 / positive_alpha.len() as f64, true)
            }
        };
        blocks.push(block);
        init_betas.push(s as f64 * f_b);
        init_flags.push(flagged);
    }
    debug_assert!(f_total >= 0.0);

    let rows = run_level_loop(
        LevelLoopInputs {
            factors: vec![x; q],
            bucket: &sk.hash,
            init_diag: v.clone(),
            blocks,
            init_betas,
            init_flags,
            streams,
        },
        |diag, level, block| sk.bucket_masses(diag, level + q - block),
        |diag, level, block, members| sk.member_masses(x, diag, level + q - block, members),
    )?;
    SampledRows::new(rows, s)
}
