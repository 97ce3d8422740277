//! Sketching primitives: CountSketch, degree-2 TensorSketch, the PolySketch
//! tree for q-fold tensor products, subsampled randomized Hadamard
//! transforms (plain and shared-sign families) and a seeded Gaussian JL map.

pub mod count_sketch;
pub mod gaussian;
pub mod poly;
pub mod srht;
pub mod tensor_sketch;

pub use count_sketch::CountSketchSpec;
pub use gaussian::GaussianJlSpec;
pub use poly::PolySketchTree;
pub use srht::{fwht_inplace, SharedSignSrhtFamily, SrhtSpec};
pub use tensor_sketch::TensorSketch2Spec;
