//! Generalized polynomial kernels and the Gaussian / NTK reductions.
//!
//! A [`GpkSpec`] pins down K = diag(v)·(Σ_j α_j²·(X̂ᵀX̂)^{∘j})·diag(v) together
//! with its feature-matrix form Φ = ⊕_j α_j·X̂^{⊗j}·diag(v). The Gaussian and
//! NTK constructors choose the truncation degree so the truncated kernel
//! stays within ελ/4 of the target kernel in Frobenius norm.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_contract, Error, Result};
use crate::features::FeatureDescriptor;
use crate::mat::{DenseMatrix, DenseVector};

/// Degree, coefficients and column scalars of a generalized polynomial
/// kernel over the (possibly column-normalized) dataset `x_hat`.
#[derive(Debug, Clone)]
pub struct GpkSpec {
    pub q: usize,
    pub alpha: Vec<f64>,
    pub v: DenseVector,
    pub x_hat: DenseMatrix,
    /// True when `x_hat` columns were normalized to unit length (NTK); the
    /// Gaussian reduction keeps the raw dataset.
    pub normalized_columns: bool,
}

/// JSON sidecar form of a spec: everything except the dataset itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpkSpecDoc {
    pub q: usize,
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
    pub normalized_columns: bool,
}

impl GpkSpec {
    pub fn doc(&self) -> GpkSpecDoc {
        GpkSpecDoc {
            q: self.q,
            alpha: self.alpha.clone(),
            v: self.v.iter().copied().collect(),
            normalized_columns: self.normalized_columns,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.doc())
            .map_err(|e| Error::data(format!("GpkSpec serialization failed: {e}")))
    }

    pub fn descriptor(&self) -> Result<FeatureDescriptor> {
        FeatureDescriptor::gpk(self.x_hat.clone(), self.v.clone(), self.alpha.clone())
    }
}

/// Exact GPK kernel matrix via Hadamard powers of the Gram matrix.
pub fn gpk_kernel_exact(spec: &GpkSpec) -> DenseMatrix {
    let n = spec.x_hat.ncols();
    let gram = spec.x_hat.transpose() * &spec.x_hat;
    let mut k = DenseMatrix::zeros(n, n);
    let mut power = DenseMatrix::repeat(n, n, 1.0);
    for (j, a) in spec.alpha.iter().enumerate() {
        if j > 0 {
            power.component_mul_assign(&gram);
        }
        if *a != 0.0 {
            k += &power * (a * a);
        }
    }
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] *= spec.v[i] * spec.v[j];
        }
    }
    k
}

/// Σ_{ℓ>q} r^ℓ/ℓ!, summed directly until terms vanish.
fn exp_tail(r: f64, q: usize) -> f64 {
    let mut term = 1.0f64;
    for l in 1..=q + 1 {
        term *= r / l as f64;
    }
    let mut sum = 0.0;
    let mut l = q + 1;
    while term > sum * 1e-18 + 1e-300 {
        sum += term;
        l += 1;
        term *= r / l as f64;
    }
    sum
}

/// Truncated-Gaussian GPK: α_j = 1/√(j!), v_i = exp(−‖x_i‖²/2), degree = the
/// smallest q whose factorial tail meets the ελ/(4n) target.
pub fn gaussian_gpk_spec(x: &DenseMatrix, eps: f64, lambda: f64) -> Result<GpkSpec> {
    ensure_contract!(eps > 0.0 && lambda > 0.0, "eps and lambda must be positive");
    let n = x.ncols();
    ensure_contract!(n > 0, "dataset must be nonempty");
    let r = (0..n).map(|l| x.column(l).norm_squared()).fold(0.0f64, f64::max);
    let target = eps * lambda / (4.0 * n as f64);
    ensure_contract!(target > 0.0, "tail target must be positive");
    let mut q = 0usize;
    while exp_tail(r, q) > target {
        q += 1;
        if q > 5000 {
            return Err(Error::numerical(format!(
                "Gaussian truncation degree exploded (r = {r}, target = {target})"
            )));
        }
    }
    let mut alpha = Vec::with_capacity(q + 1);
    let mut fact = 1.0f64;
    for j in 0..=q {
        if j > 0 {
            fact *= j as f64;
        }
        alpha.push(1.0 / fact.sqrt());
    }
    let v = DenseVector::from_fn(n, |l, _| (-x.column(l).norm_squared() / 2.0).exp());
    Ok(GpkSpec { q, alpha, v, x_hat: x.clone(), normalized_columns: false })
}

/// Closed-form NTK angular factor k_ntk(β) = (1/π)(√(1−β²) + 2β(π − arccos β)).
pub fn k_ntk(beta: f64) -> f64 {
    let b = beta.clamp(-1.0, 1.0);
    ((1.0 - b * b).max(0.0).sqrt() + 2.0 * b * (std::f64::consts::PI - b.acos()))
        / std::f64::consts::PI
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Taylor coefficient c_j of k_ntk at 0. Zero for odd j > 1; the even-j
/// closed form is evaluated in log space so large degrees cannot overflow.
pub fn ntk_taylor_coeff(j: usize) -> f64 {
    use std::f64::consts::PI;
    match j {
        0 => 1.0 / PI,
        1 => 1.0,
        _ if j % 2 == 1 => 0.0,
        _ => {
            let jf = j as f64;
            let ln = -PI.ln() + (jf + 1.0).ln() + ln_factorial(j - 2)
                - (jf - 2.0) * 2.0f64.ln()
                - 2.0 * ln_factorial(j / 2 - 1)
                - (jf - 1.0).ln()
                - jf.ln();
            ln.exp()
        }
    }
}

/// NTK GPK: columns normalized into X̂, v_i = ‖x_i‖, α_j = √(c_j), degree
/// 2q+2 with q the smallest integer satisfying the closed-form tail bound
/// n·r/(2π√q) ≤ ελ/4 (r = max squared column norm).
pub fn ntk_gpk_spec(x: &DenseMatrix, eps: f64, lambda: f64) -> Result<GpkSpec> {
    ensure_contract!(eps > 0.0 && lambda > 0.0, "eps and lambda must be positive");
    let n = x.ncols();
    ensure_contract!(n > 0, "dataset must be nonempty");
    let mut x_hat = x.clone();
    let mut v = DenseVector::zeros(n);
    for l in 0..n {
        let norm = x.column(l).norm();
        if norm == 0.0 {
            return Err(Error::contract(format!(
                "column {l} has zero norm; NTK normalization undefined"
            )));
        }
        v[l] = norm;
        x_hat.column_mut(l).scale_mut(1.0 / norm);
    }
    let r = v.iter().map(|s| s * s).fold(0.0f64, f64::max);
    let ratio = 2.0 * n as f64 * r / (std::f64::consts::PI * eps * lambda);
    let q_tail = (ratio * ratio).ceil().max(1.0) as usize;
    let degree = 2 * q_tail + 2;
    let alpha: Vec<f64> = (0..=degree).map(|j| ntk_taylor_coeff(j).sqrt()).collect();
    Ok(GpkSpec { q: degree, alpha, v, x_hat, normalized_columns: true })
}

/// Exact Gaussian kernel, K_ij = exp(−‖x_i − x_j‖²/2).
pub fn gaussian_kernel_exact(x: &DenseMatrix) -> DenseMatrix {
    gaussian_kernel_cross(x, x)
}

/// Rectangular Gaussian kernel between two datasets, one column per point.
pub fn gaussian_kernel_cross(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.ncols(), b.ncols(), |i, j| {
        (-(a.column(i) - b.column(j)).norm_squared() / 2.0).exp()
    })
}

/// Exact NTK, Θ(x, y) = ‖x‖‖y‖·k_ntk(cos angle). Zero columns are an error
/// because the normalization is undefined there.
pub fn ntk_kernel_exact(x: &DenseMatrix) -> Result<DenseMatrix> {
    ntk_kernel_cross(x, x)
}

/// Rectangular NTK between two datasets.
pub fn ntk_kernel_cross(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let norms = |m: &DenseMatrix| -> Result<Vec<f64>> {
        let ns: Vec<f64> = (0..m.ncols()).map(|l| m.column(l).norm()).collect();
        if let Some(l) = ns.iter().position(|&v| v == 0.0) {
            return Err(Error::contract(format!("column {l} has zero norm")));
        }
        Ok(ns)
    };
    let na = norms(a)?;
    let nb = norms(b)?;
    Ok(DenseMatrix::from_fn(a.ncols(), b.ncols(), |i, j| {
        let beta = a.column(i).dot(&b.column(j)) / (na[i] * nb[j]);
        na[i] * nb[j] * k_ntk(beta)
    }))
}

/// Statistical dimension s_λ = Σ_i λ_i/(λ_i + λ) over the kernel eigenvalues.
pub fn statistical_dimension(k: &DenseMatrix, lambda: f64) -> Result<f64> {
    ensure_contract!(k.is_square(), "kernel matrix must be square");
    ensure_contract!(lambda > 0.0, "lambda must be positive");
    let eig = k.clone().symmetric_eigen();
    Ok(eig.eigenvalues.iter().map(|ev| {
        let e = ev.max(0.0);
        e / (e + lambda)
    }).sum())
}
