//! Dataset ingestion and generation. Columns of the returned matrix are data
//! points; labels ride alongside as plain f64 values.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use tensorlev::error::{Error, Result};
use tensorlev::rng::RngStream;
use tensorlev::{DenseMatrix, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl DataFormat {
    pub fn name(self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Libsvm => "libsvm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// d×n, one column per point.
    pub x: DenseMatrix,
    pub y: Vec<f64>,
}

pub fn ingest(path: &Path, format: DataFormat, label_column: usize) -> Result<Dataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let parsed = match format {
        DataFormat::Csv => parse_csv(&text, label_column),
        DataFormat::Libsvm => parse_libsvm(&text),
    };
    parsed.map_err(|e| match e {
        Error::Data(msg) => Error::data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// One sample per line, comma-separated floats, the label sitting in
/// `label_column`; the remaining fields are the feature vector in file order.
pub fn parse_csv(text: &str, label_column: usize) -> Result<Dataset> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if label_column >= fields.len() {
            return Err(Error::data(format!(
                "line {}: label column {label_column} out of range ({} fields)",
                lineno + 1,
                fields.len()
            )));
        }
        let mut point = Vec::with_capacity(fields.len() - 1);
        for (c, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::data(format!("line {}: bad number {field:?}", lineno + 1))
            })?;
            if c == label_column {
                labels.push(value);
            } else {
                point.push(value);
            }
        }
        match dim {
            None => dim = Some(point.len()),
            Some(d) if d != point.len() => {
                return Err(Error::data(format!(
                    "line {}: {} features, expected {d}",
                    lineno + 1,
                    point.len()
                )))
            }
            _ => {}
        }
        columns.push(point);
    }
    build_dataset(columns, labels, dim)
}

/// Standard sparse lines "label idx:val idx:val…" with 1-based indices;
/// anything after '#' is a comment. The ambient dimension is the largest
/// index seen anywhere in the file.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_str = parts.next().expect("nonempty line has a first token");
        let label: f64 = label_str.parse().map_err(|_| {
            Error::data(format!("line {}: bad label {label_str:?}", lineno + 1))
        })?;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for token in parts {
            let (idx_str, val_str) = token.split_once(':').ok_or_else(|| {
                Error::data(format!("line {}: expected idx:val, got {token:?}", lineno + 1))
            })?;
            let idx: usize = idx_str.parse().map_err(|_| {
                Error::data(format!("line {}: bad index {idx_str:?}", lineno + 1))
            })?;
            if idx == 0 {
                return Err(Error::data(format!(
                    "line {}: indices are 1-based, found 0",
                    lineno + 1
                )));
            }
            let val: f64 = val_str.parse().map_err(|_| {
                Error::data(format!("line {}: bad value {val_str:?}", lineno + 1))
            })?;
            if entries.iter().any(|&(i, _)| i == idx - 1) {
                return Err(Error::data(format!(
                    "line {}: duplicate index {idx}",
                    lineno + 1
                )));
            }
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        labels.push(label);
        sparse.push(entries);
    }
    if sparse.is_empty() {
        return Err(Error::data("no samples found"));
    }
    let n = sparse.len();
    let mut x = DenseMatrix::zeros(dim, n);
    for (l, entries) in sparse.iter().enumerate() {
        for &(r, v) in entries {
            x[(r, l)] = v;
        }
    }
    Ok(Dataset { x, y: labels })
}

fn build_dataset(columns: Vec<Vec<f64>>, labels: Vec<f64>, dim: Option<usize>) -> Result<Dataset> {
    let d = dim.ok_or_else(|| Error::data("no samples found"))?;
    if d == 0 {
        return Err(Error::data("samples have no features"));
    }
    let n = columns.len();
    let x = DenseMatrix::from_fn(d, n, |r, c| columns[c][r]);
    Ok(Dataset { x, y: labels })
}

/// Writes label-first CSV, one sample per line. Floats print in shortest
/// round-trip form so reingestion is bit-exact.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    for l in 0..data.x.ncols() {
        out.push_str(&format!("{}", data.y[l]));
        for r in 0..data.x.nrows() {
            out.push_str(&format!(",{}", data.x[(r, l)]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Writes LibSVM lines with 1-based indices, skipping exact zeros.
pub fn write_libsvm(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    for l in 0..data.x.ncols() {
        out.push_str(&format!("{}", data.y[l]));
        for r in 0..data.x.nrows() {
            let v = data.x[(r, l)];
            if v != 0.0 {
                out.push_str(&format!(" {}:{}", r + 1, v));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Seeded Gaussian cloud rescaled so the largest squared column norm is
/// exactly `r_max`, with targets y = sin(2·wᵀx) + noise·g for a hidden unit
/// direction w. Keeping r_max small keeps truncated-kernel degrees small.
pub fn synth_regression(d: usize, n: usize, r_max: f64, noise: f64, seed: u64) -> Result<Dataset> {
    if d == 0 || n == 0 {
        return Err(Error::contract("d and n must be positive"));
    }
    if !(r_max > 0.0) || noise < 0.0 {
        return Err(Error::contract("need r_max > 0 and noise >= 0"));
    }
    let stream = RngStream::from_seed(seed);
    let mut xrng = stream.child(0).rng();
    let mut x = DenseMatrix::from_fn(d, n, |_, _| xrng.sample::<f64, _>(StandardNormal));
    let max_sq = (0..n).map(|l| x.column(l).norm_squared()).fold(0.0f64, f64::max);
    x *= (r_max / max_sq).sqrt();
    let mut wrng = stream.child(1).rng();
    let w = DenseVector::from_fn(d, |_, _| wrng.sample::<f64, _>(StandardNormal)).normalize();
    let mut nrng = stream.child(2).rng();
    let y = (0..n)
        .map(|l| (2.0 * w.dot(&x.column(l))).sin() + noise * nrng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(Dataset { x, y })
}

/// Seeded Gaussian blobs around `classes` random centers; labels are the
/// blob index. Columns are rescaled exactly like [`synth_regression`].
pub fn synth_classification(
    d: usize,
    n: usize,
    classes: usize,
    r_max: f64,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if d == 0 || n == 0 || classes < 2 {
        return Err(Error::contract("need d, n >= 1 and at least two classes"));
    }
    if !(r_max > 0.0) || !(spread > 0.0) {
        return Err(Error::contract("need positive r_max and spread"));
    }
    let stream = RngStream::from_seed(seed);
    let mut crng = stream.child(0).rng();
    let centers =
        DenseMatrix::from_fn(d, classes, |_, _| 2.0 * crng.sample::<f64, _>(StandardNormal));
    let mut prng = stream.child(1).rng();
    let mut x = DenseMatrix::zeros(d, n);
    let mut y = Vec::with_capacity(n);
    for l in 0..n {
        let class = l % classes;
        for r in 0..d {
            x[(r, l)] = centers[(r, class)] + spread * prng.sample::<f64, _>(StandardNormal);
        }
        y.push(class as f64);
    }
    let max_sq = (0..n).map(|l| x.column(l).norm_squared()).fold(0.0f64, f64::max);
    x *= (r_max / max_sq).sqrt();
    Ok(Dataset { x, y })
}

/// d×n matrix with exactly `nnz` standard-normal entries at uniformly chosen
/// positions, rescaled so the largest squared column norm is 1. Used by the
/// bench grid to vary sparsity at fixed shape.
pub fn synth_sparse(d: usize, n: usize, nnz: usize, seed: u64) -> Result<DenseMatrix> {
    if d == 0 || n == 0 {
        return Err(Error::contract("d and n must be positive"));
    }
    if nnz == 0 || nnz > d * n {
        return Err(Error::contract(format!("nnz must lie in [1, {}]", d * n)));
    }
    let stream = RngStream::from_seed(seed);
    let mut rng = stream.child(0).rng();
    let mut positions: Vec<usize> = (0..d * n).collect();
    positions.shuffle(&mut rng);
    let mut x = DenseMatrix::zeros(d, n);
    for &p in positions.iter().take(nnz) {
        x[(p % d, p / d)] = rng.sample::<f64, _>(StandardNormal);
    }
    let max_sq = (0..n).map(|l| x.column(l).norm_squared()).fold(0.0f64, f64::max);
    if max_sq > 0.0 {
        x *= (1.0 / max_sq).sqrt();
    }
    Ok(x)
}
