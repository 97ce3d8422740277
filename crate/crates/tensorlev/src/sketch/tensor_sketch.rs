//! Degree-2 TensorSketch: two inner CountSketches combined by circular
//! convolution, so that apply(a, b) sketches a ⊗ b in O(m log m).

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ensure_contract, Result};
use crate::rng::RngStream;
use crate::sketch::count_sketch::CountSketchSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Circular convolution of two equal-length real vectors via the FFT.
fn circular_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inv.process(&mut fa);
    });
    // rustfft leaves the inverse unnormalized
    fa.iter().map(|c| c.re / m as f64).collect()
}

#[derive(Debug, Clone)]
pub struct TensorSketch2Spec {
    pub dim: usize,
    inner_left: CountSketchSpec,
    inner_right: CountSketchSpec,
}

impl TensorSketch2Spec {
    pub fn build(dim: usize, stream: &RngStream) -> Self {
        TensorSketch2Spec {
            dim,
            inner_left: CountSketchSpec::build(dim, dim, &stream.child(0)),
            inner_right: CountSketchSpec::build(dim, dim, &stream.child(1)),
        }
    }

    /// Fixed inner maps, for pinned-value tests.
    pub fn from_parts(inner_left: CountSketchSpec, inner_right: CountSketchSpec) -> Result<Self> {
        ensure_contract!(
            inner_left.input_dim == inner_left.output_dim
                && inner_right.input_dim == inner_right.output_dim
                && inner_left.output_dim == inner_right.output_dim,
            "inner CountSketches must be square and matched"
        );
        Ok(TensorSketch2Spec { dim: inner_left.output_dim, inner_left, inner_right })
    }

    pub fn apply(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        ensure_contract!(
            a.len() == self.dim && b.len() == self.dim,
            "inputs must have length {}",
            self.dim
        );
        let ca = self.inner_left.apply_dense(a)?;
        let cb = self.inner_right.apply_dense(b)?;
        Ok(circular_convolve(&ca, &cb))
    }
}
