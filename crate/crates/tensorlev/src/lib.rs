//! Leverage-score sampling operators for tensor-product feature matrices.
//!
//! The library builds row-sampling sketches Π for implicit feature matrices
//! Φ (polynomial, Gaussian and NTK kernels) such that ΦᵀΠᵀΠΦ + λI spectrally
//! approximates ΦᵀΦ + λI, without ever materializing Φ. Brute-force oracles
//! for desk-scale verification live in [`oracle`].

pub mod error;
pub mod features;
pub mod kernels;
pub mod mat;
pub mod oracle;
pub mod recursive;
pub mod rng;
pub mod samplers;
pub mod sketch;
pub mod tensor_norm;

pub use error::{Error, Result};
pub use features::{FeatureDescriptor, FeatureKind};
pub use mat::{DenseMatrix, DenseVector, SparseColMatrix};
