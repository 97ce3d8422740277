//! Outer sampling driver. Runs the row sampler down a halving schedule of
//! regularizers, starting from λ₀ = ‖Φ‖²_F/ε where a zero sketch is already
//! admissible, and feeding each level's materialized sketch into the next
//! call. The final sampler targets the user's λ.

use crate::error::{ensure_contract, Error, Result};
use crate::features::{FeatureDescriptor, FeatureKind};
use crate::mat::{sym_inv_sqrt_shifted, DenseMatrix};
use crate::rng::RngStream;
use crate::samplers::{
    materialize_sampled_rows, row_sampler_gpk, row_sampler_selftensor, row_sampler_tensor,
    SampledRows, SamplerConfig,
};

/// Settings for one full recursive run.
#[derive(Debug, Clone)]
pub struct SamplerRunConfig {
    pub eps: f64,
    pub lambda: f64,
    /// Upper bound on the statistical dimension at `lambda`; scales the
    /// number of sampled rows.
    pub mu: f64,
    /// Multiplier in s = ⌈c·(μ/ε²)·log₂ n⌉.
    pub c: f64,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// Admissibility cap: ‖Φ‖²_F/(ελ) must not exceed n^cap_exponent.
    pub cap_exponent: f64,
}

impl SamplerRunConfig {
    pub fn new(eps: f64, lambda: f64, mu: f64, seed: u64) -> Self {
        SamplerRunConfig {
            eps,
            lambda,
            mu,
            c: 4.0,
            sampler: SamplerConfig::default(),
            seed,
            cap_exponent: 8.0,
        }
    }

    /// Rows drawn at every level: s = ⌈c·(μ/ε²)·log₂ n⌉, at least 1.
    pub fn sample_count(&self, n: usize) -> usize {
        let raw = self.c * self.mu / (self.eps * self.eps) * (n as f64).log2();
        (raw.ceil() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        ensure_contract!(self.eps > 0.0 && self.eps < 1.0, "eps must lie in (0,1)");
        ensure_contract!(self.lambda > 0.0, "lambda must be positive");
        ensure_contract!(self.mu >= 1.0, "mu must be at least 1");
        ensure_contract!(self.c > 0.0, "sample multiplier must be positive");
        Ok(())
    }
}

/// λ₀ = frob_sq/eps and the level count T = ⌈log₂(λ₀/λ)⌉. The sampler call
/// at level t runs at λ₀/2^(t−1), so for T ≥ 1 the last call's regularizer
/// lies in (λ, 2λ] and the post-halving value λ₀/2^T in (λ/2, λ].
pub fn sampling_schedule(frob_sq: f64, eps: f64, lambda: f64) -> Result<(f64, i64)> {
    ensure_contract!(frob_sq > 0.0 && frob_sq.is_finite(), "feature mass must be positive");
    ensure_contract!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    ensure_contract!(lambda > 0.0, "lambda must be positive");
    let lambda0 = frob_sq / eps;
    let t = (lambda0 / lambda).log2().ceil() as i64;
    Ok((lambda0, t))
}

fn dispatch_row_sampler(
    desc: &FeatureDescriptor,
    b: &DenseMatrix,
    lambda: f64,
    s: usize,
    cfg: &SamplerConfig,
    stream: &RngStream,
) -> Result<SampledRows> {
    match desc.kind() {
        FeatureKind::TensorProduct { datasets } => {
            row_sampler_tensor(datasets, b, lambda, s, cfg, stream)
        }
        FeatureKind::SelfTensor { x, q } => {
            row_sampler_selftensor(x, *q, b, lambda, s, cfg, stream)
        }
        FeatureKind::Gpk { x, v, alpha } => {
            row_sampler_gpk(x, v, alpha, b, lambda, s, cfg, stream)
        }
    }
}

/// Runs the full halving schedule and returns the final sampler Π together
/// with the materialized sketch Π·Φ (one weighted Φ row per sample). Level t
/// draws its randomness from seed child t, so runs are reproducible and
/// levels are independent.
pub fn recursive_leverage_sample(
    desc: &FeatureDescriptor,
    cfg: &SamplerRunConfig,
) -> Result<(SampledRows, DenseMatrix)> {
    cfg.validate()?;
    let n = desc.n_cols();
    let frob = desc.frobenius_sq();
    if frob <= 0.0 {
        return Err(Error::contract("feature matrix is identically zero"));
    }
    let ratio = frob / (cfg.eps * cfg.lambda);
    let cap = (n.max(2) as f64).powf(cfg.cap_exponent);
    ensure_contract!(
        ratio <= cap,
        "mass ratio {ratio:.3e} exceeds the admissibility cap n^{} = {cap:.3e}",
        cfg.cap_exponent
    );

    let s = cfg.sample_count(n);
    let (lambda0, t) = sampling_schedule(frob, cfg.eps, cfg.lambda)?;
    let levels = if t <= 0 {
        log::info!(
            "target lambda {} is at or above lambda0 {lambda0}; running a single level at lambda0",
            cfg.lambda
        );
        1
    } else {
        t as usize
    };

    let root = RngStream::from_seed(cfg.seed);
    let mut b = DenseMatrix::zeros(1, n);
    let mut level_lambda = lambda0;
    let mut result: Option<SampledRows> = None;
    for level in 1..=levels {
        let sampled = dispatch_row_sampler(desc, &b, level_lambda, s, &cfg.sampler, &root.child(level as u64))?;
        b = materialize_sampled_rows(&sampled, desc)?;
        result = Some(sampled);
        level_lambda /= 2.0;
    }
    Ok((result.expect("at least one level runs"), b))
}

/// Verifies the two-sided spectral sandwich at regularizer λ: every
/// eigenvalue of W = (K+λI)^(−1/2)(ZᵀZ+λI)(K+λI)^(−1/2) must lie in
/// [1/(1+ε), 1/(1−ε)]. Returns (pass, max_dev) where max_dev is the largest
/// |1/eigenvalue − 1|; pass allows 1e-9 slack over ε.
pub fn spectral_check(
    k_exact: &DenseMatrix,
    z: &DenseMatrix,
    lambda: f64,
    eps: f64,
) -> Result<(bool, f64)> {
    let n = k_exact.nrows();
    ensure_contract!(k_exact.ncols() == n, "kernel matrix must be square");
    ensure_contract!(z.ncols() == n, "sketch must have {n} columns, got {}", z.ncols());
    ensure_contract!(lambda > 0.0, "lambda must be positive");
    ensure_contract!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    let scale = k_exact.norm().max(1.0);
    for i in 0..n {
        for j in 0..i {
            ensure_contract!(
                (k_exact[(i, j)] - k_exact[(j, i)]).abs() <= 1e-8 * scale,
                "kernel matrix is not symmetric at ({i},{j})"
            );
        }
    }
    let reg = sym_inv_sqrt_shifted(k_exact, lambda)?;
    let mut sketch_gram = z.transpose() * z;
    for i in 0..n {
        sketch_gram[(i, i)] += lambda;
    }
    let w = &reg * sketch_gram * &reg;
    let w = (&w + w.transpose()) * 0.5;
    let eig = w.symmetric_eigen();
    let mut max_dev = 0.0f64;
    for &mu in eig.eigenvalues.iter() {
        if mu <= 0.0 {
            return Ok((false, f64::INFINITY));
        }
        max_dev = max_dev.max((1.0 / mu - 1.0).abs());
    }
    Ok((max_dev <= eps + 1e-9, max_dev))
}
