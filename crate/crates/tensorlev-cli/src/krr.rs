//! Kernel ridge regression on sketched features. Fitting never touches the
//! full feature matrix: with an s×n sketch Z the coefficient system
//! (ZᵀZ+λI)c = y collapses through the push-through identity to one s×s
//! Cholesky solve. Prediction always uses the exact kernel.

use tensorlev::error::{Error, Result};
use tensorlev::DenseMatrix;

/// Solves (ZᵀZ + λI)·C = targets as C = (targets − Zᵀ(ZZᵀ+λI)⁻¹Z·targets)/λ.
/// `z` is s×n, `targets` is n×t; the result is n×t.
pub fn fit_sketched(z: &DenseMatrix, targets: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::contract("lambda must be positive"));
    }
    if z.ncols() != targets.nrows() {
        return Err(Error::contract(format!(
            "sketch has {} columns but targets have {} rows",
            z.ncols(),
            targets.nrows()
        )));
    }
    let s = z.nrows();
    let mut small = z * z.transpose();
    for i in 0..s {
        small[(i, i)] += lambda;
    }
    let chol = small
        .cholesky()
        .ok_or_else(|| Error::numerical("Cholesky of the sketched system (ZZᵀ+λI) failed"))?;
    let u = chol.solve(&(z * targets));
    Ok((targets - z.transpose() * u) / lambda)
}

/// Solves (K + λI)·C = targets directly; the exact-oracle counterpart of
/// [`fit_sketched`].
pub fn fit_exact(k: &DenseMatrix, targets: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::contract("lambda must be positive"));
    }
    if !k.is_square() || k.nrows() != targets.nrows() {
        return Err(Error::contract("kernel must be square and match the target rows"));
    }
    let mut reg = k.clone();
    for i in 0..k.nrows() {
        reg[(i, i)] += lambda;
    }
    let chol = reg
        .cholesky()
        .ok_or_else(|| Error::numerical("Cholesky of the exact system (K+λI) failed"))?;
    Ok(chol.solve(targets))
}

/// f(x*) = Σ_i c_i·k(x_i, x*): `cross` is n_train×n_test, `coeffs` is
/// n_train×t, the result n_test×t.
pub fn predict(cross: &DenseMatrix, coeffs: &DenseMatrix) -> Result<DenseMatrix> {
    if cross.nrows() != coeffs.nrows() {
        return Err(Error::contract("cross-kernel rows must match coefficient rows"));
    }
    Ok(cross.transpose() * coeffs)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::contract("rmse needs two equal-length nonempty slices"));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Expands integral labels into an n×k one-hot target matrix and returns the
/// sorted class values alongside. Non-integral labels are data errors.
pub fn one_hot(labels: &[f64]) -> Result<(DenseMatrix, Vec<i64>)> {
    if labels.is_empty() {
        return Err(Error::data("no labels to encode"));
    }
    let mut classes = Vec::new();
    for &l in labels {
        if !l.is_finite() || (l - l.round()).abs() > 1e-9 {
            return Err(Error::data(format!("label {l} is not an integer class")));
        }
        let c = l.round() as i64;
        if !classes.contains(&c) {
            classes.push(c);
        }
    }
    classes.sort_unstable();
    let mut y = DenseMatrix::zeros(labels.len(), classes.len());
    for (i, &l) in labels.iter().enumerate() {
        let c = l.round() as i64;
        let col = classes.binary_search(&c).expect("class was collected above");
        y[(i, col)] = 1.0;
    }
    Ok((y, classes))
}

/// Fraction of rows whose argmax score names the wrong class.
pub fn error_rate(scores: &DenseMatrix, classes: &[i64], truth: &[f64]) -> Result<f64> {
    if scores.nrows() != truth.len() || scores.ncols() != classes.len() || truth.is_empty() {
        return Err(Error::contract("scores must be n_test × n_classes with matching labels"));
    }
    let mut wrong = 0usize;
    for (i, &t) in truth.iter().enumerate() {
        let mut best = 0usize;
        for c in 1..classes.len() {
            if scores[(i, c)] > scores[(i, best)] {
                best = c;
            }
        }
        if classes[best] as f64 != t.round() {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use tensorlev::mat::hadamard_pow;
    use tensorlev::oracle::materialize_phi;
    use tensorlev::rng::RngStream;
    use tensorlev::FeatureDescriptor;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = RngStream::from_seed(seed).rng();
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn woodbury_matches_the_direct_inverse() {
        let z = random_matrix(5, 12, 1);
        let targets = random_matrix(12, 2, 2);
        let lambda = 0.7;
        let got = fit_sketched(&z, &targets, lambda).unwrap();
        let mut big = z.transpose() * &z;
        for i in 0..12 {
            big[(i, i)] += lambda;
        }
        let want = big.try_inverse().unwrap() * &targets;
        assert!((got - want).norm() < 1e-10);
    }

    #[test]
    fn full_feature_sketch_reproduces_the_exact_fit() {
        let x = random_matrix(3, 30, 7);
        let q = 2;
        let desc = FeatureDescriptor::self_tensor(x.clone(), q).unwrap();
        let phi = materialize_phi(&desc, 10_000).unwrap();
        let y = random_matrix(30, 1, 8);
        let lambda = 0.3;
        let k = hadamard_pow(&(x.transpose() * &x), q);
        let sketched = fit_sketched(&phi.mat, &y, lambda).unwrap();
        let exact = fit_exact(&k, &y, lambda).unwrap();
        assert!((&sketched - &exact).norm() < 1e-8);

        let x_test = random_matrix(3, 9, 9);
        let cross = hadamard_pow(&(x.transpose() * &x_test), q);
        let pred_s = predict(&cross, &sketched).unwrap();
        let pred_e = predict(&cross, &exact).unwrap();
        assert!((pred_s - pred_e).norm() < 1e-8);
    }

    #[test]
    fn infinite_regularization_predicts_zero() {
        let z = random_matrix(4, 15, 3);
        let y = random_matrix(15, 1, 4);
        let coeffs = fit_sketched(&z, &y, 1e9).unwrap();
        let cross = random_matrix(15, 6, 5);
        let pred = predict(&cross, &coeffs).unwrap();
        let y_test: Vec<f64> = (0..6).map(|i| (i as f64) - 2.5).collect();
        let pred_col: Vec<f64> = pred.column(0).iter().copied().collect();
        let r = rmse(&pred_col, &y_test).unwrap();
        let rms: f64 =
            (y_test.iter().map(|v| v * v).sum::<f64>() / y_test.len() as f64).sqrt();
        assert!((r - rms).abs() < 1e-6 * rms.max(1.0));
    }

    #[test]
    fn one_hot_and_argmax_round_trip() {
        let labels = [0.0, 2.0, 1.0, 0.0, 2.0];
        let (y, classes) = one_hot(&labels).unwrap();
        assert_eq!(classes, vec![0, 1, 2]);
        assert_eq!(y.nrows(), 5);
        assert_eq!(y.ncols(), 3);
        for i in 0..5 {
            assert_eq!(y.row(i).sum(), 1.0);
        }
        // perfect scores recover every label
        assert_eq!(error_rate(&y, &classes, &labels).unwrap(), 0.0);
        // flipping one row's scores miscounts exactly that row
        let mut bad = y.clone();
        bad[(0, 0)] = 0.0;
        bad[(0, 2)] = 1.0;
        assert!((error_rate(&bad, &classes, &labels).unwrap() - 0.2).abs() < 1e-12);
        assert!(one_hot(&[0.5]).is_err());
    }

    #[test]
    fn bad_inputs_name_the_failing_stage() {
        let z = random_matrix(3, 8, 6);
        let y = random_matrix(8, 1, 7);
        assert!(matches!(
            fit_sketched(&z, &y, 0.0),
            Err(tensorlev::Error::Contract(_))
        ));
        assert!(matches!(
            fit_sketched(&z, &random_matrix(5, 1, 7), 1.0),
            Err(tensorlev::Error::Contract(_))
        ));
        let mut nan_z = z.clone();
        nan_z[(0, 0)] = f64::NAN;
        let err = fit_sketched(&nan_z, &y, 1.0).unwrap_err();
        assert!(err.to_string().contains("ZZᵀ+λI"), "{err}");
        assert!(matches!(err, tensorlev::Error::Numerical(_)));
    }
}
