//! Row norm samplers for implicit feature matrices.
//!
//! Each sampler draws s i.i.d. multi-indices (i₁,…,i_b) with probability
//! close to the squared-norm share of the corresponding row of
//! Φ·(BᵀB+λI)^(−1/2), without ever materializing Φ. The heavy lifting is a
//! Gaussian compression of the regularized inverse square root plus
//! TensorNorm queries; the level loop then walks one tensor position at a
//! time, first over hash buckets of rows, then within the sampled bucket.

mod basis;
mod bucket;
mod engine;
mod gpk;
mod rows;
mod selftensor;
mod tensor;

pub use basis::{reg_inv_sqrt, RegularizedBasis};
pub use bucket::BucketHash;
pub use gpk::row_sampler_gpk;
pub use rows::{materialize_sampled_rows, SampledRow, SampledRows};
pub use selftensor::row_sampler_selftensor;
pub use tensor::row_sampler_tensor;

use crate::tensor_norm::TnDsConfig;

/// Size knobs for the samplers. The c_* multipliers scale the asymptotic
/// widths from the analysis (all default 1); the *_min floors keep the maps
/// sane on desk-scale inputs where log₂n or q² would round to nothing.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Gaussian compression rows: d' = ⌈c_jl·q·log₂n⌉ for distinct datasets,
    /// ⌈c_jl·q²·log₂n⌉ for the self-tensor and GPK variants.
    pub c_jl: f64,
    pub jl_dim_min: usize,
    /// Median copies m' = ⌈c_medians·log₂n⌉.
    pub c_medians: f64,
    pub medians_min: usize,
    pub medians_override: Option<usize>,
    /// Shared-sign SRHT rows m'' = ⌈c_srht_rows·(q³+q²κ)·log₂n⌉, clamped to
    /// the padded dataset dimension.
    pub c_srht_rows: f64,
    /// Bucket compression rows n' = ⌈c_deg1_dim·q²⌉.
    pub c_deg1_dim: f64,
    pub deg1_dim_min: usize,
    /// Bucket count s' = ⌈c_buckets·q²·s⌉ (q³ for self-tensor and GPK).
    pub c_buckets: f64,
    pub ds: TnDsConfig,
    /// Replaces the per-algorithm TensorNorm accuracy (1/(20q) or 1/(40q)).
    pub ds_eps_override: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            c_jl: 1.0,
            jl_dim_min: 16,
            c_medians: 1.0,
            medians_min: 5,
            medians_override: None,
            c_srht_rows: 1.0,
            c_deg1_dim: 1.0,
            deg1_dim_min: 4,
            c_buckets: 1.0,
            ds: TnDsConfig::default(),
            ds_eps_override: None,
        }
    }
}

impl SamplerConfig {
    /// Raised floors for verification runs on tiny instances, where the
    /// default desk-scale dimensions leave visible estimator noise.
    pub fn accurate() -> Self {
        SamplerConfig {
            jl_dim_min: 1024,
            medians_min: 7,
            ds: TnDsConfig { reps_min: 7, ..TnDsConfig::default() },
            ..SamplerConfig::default()
        }
    }

    /// Trimmed sketch sizes for timed batch runs. Row probabilities get
    /// noisier but stay within the constant-factor slack the reweighting
    /// absorbs, so sandwich quality degrades only mildly.
    pub fn fast() -> Self {
        SamplerConfig {
            c_jl: 0.5,
            medians_override: Some(3),
            ds: TnDsConfig {
                reps_override: Some(3),
                polysketch_dim_max: 128,
                srht_dim_cap: 64,
                ..TnDsConfig::default()
            },
            ..SamplerConfig::default()
        }
    }

    pub(crate) fn jl_dim(&self, degree_scale: f64, n: usize) -> usize {
        let raw = (self.c_jl * degree_scale * (n as f64).log2()).ceil() as usize;
        raw.max(self.jl_dim_min).max(1)
    }

    pub(crate) fn medians(&self, n: usize) -> usize {
        if let Some(m) = self.medians_override {
            return m.max(1);
        }
        let raw = (self.c_medians * (n as f64).log2()).ceil().max(0.0) as usize;
        raw.max(self.medians_min).max(1)
    }

    pub(crate) fn deg1_dim(&self, q: usize) -> usize {
        let raw = (self.c_deg1_dim * (q * q) as f64).ceil() as usize;
        raw.max(self.deg1_dim_min).max(1)
    }

    pub(crate) fn bucket_count(&self, degree_scale: f64, s: usize) -> usize {
        ((self.c_buckets * degree_scale * s as f64).ceil() as usize).max(1)
    }
}
