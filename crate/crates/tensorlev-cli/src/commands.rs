//! Command implementations. Each command validates its configuration before
//! touching any data, times its stages, and returns a [`Report`] for stdout.
//! Exact-oracle paths (Gram matrices, reference fits) are gated on n so a
//! stray flag cannot trigger an n×n eigendecomposition on a large input.

use std::fs;
use std::path::Path;
use std::time::Instant;

use tensorlev::error::{Error, Result};
use tensorlev::kernels::{
    gaussian_gpk_spec, gaussian_kernel_cross, gaussian_kernel_exact, ntk_gpk_spec,
    ntk_kernel_cross, ntk_kernel_exact, statistical_dimension,
};
use tensorlev::mat::hadamard_pow;
use tensorlev::oracle::exact_gram;
use tensorlev::recursive::{recursive_leverage_sample, spectral_check, SamplerRunConfig};
use tensorlev::samplers::SampledRows;
use tensorlev::{DenseMatrix, FeatureDescriptor};

use crate::data::{self, DataFormat, Dataset};
use crate::ensure_contract;
use crate::krr;
use crate::report::{BenchRow, ExperimentConfig, Report, StageTiming, TrialResult};
use crate::{BenchArgs, CoreArgs, KernelChoice, KrrArgs, SampleArgs, SynthArgs};

/// Largest n for which the CLI will materialize an exact n×n kernel
/// (--mu-auto and --verify); larger runs must pass --mu and skip verification.
pub const EXACT_ORACLE_MAX_N: usize = 2000;

fn timed<T>(
    timings: &mut Vec<StageTiming>,
    stage: &str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push(StageTiming { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
    Ok(out)
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::data(format!("{}: {e}", path.display()))
}

fn library_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Maps the kernel flag onto a feature descriptor. The gaussian and ntk
/// choices derive their truncation degree from ε and λ, so --q is rejected
/// there rather than silently ignored.
pub(crate) fn build_descriptor(
    kernel: KernelChoice,
    q: Option<usize>,
    datasets: Vec<DenseMatrix>,
    eps: f64,
    lambda: f64,
) -> Result<FeatureDescriptor> {
    match kernel {
        KernelChoice::Polynomial => {
            ensure_contract!(datasets.len() == 1, "polynomial kernels take exactly one dataset");
            let q = q.ok_or_else(|| Error::contract("polynomial kernels need --q"))?;
            let x = datasets.into_iter().next().expect("length checked above");
            FeatureDescriptor::self_tensor(x, q)
        }
        KernelChoice::Tensor => {
            ensure_contract!(
                datasets.len() >= 2,
                "tensor kernels take one --data file per factor, at least two"
            );
            if let Some(q) = q {
                ensure_contract!(
                    q == datasets.len(),
                    "--q {q} does not match the {} datasets given",
                    datasets.len()
                );
            }
            FeatureDescriptor::tensor_product(datasets)
        }
        KernelChoice::Gaussian => {
            ensure_contract!(datasets.len() == 1, "gaussian kernels take exactly one dataset");
            ensure_contract!(
                q.is_none(),
                "gaussian kernels derive the degree from eps and lambda; drop --q"
            );
            gaussian_gpk_spec(&datasets[0], eps, lambda)?.descriptor()
        }
        KernelChoice::Ntk => {
            ensure_contract!(datasets.len() == 1, "ntk kernels take exactly one dataset");
            ensure_contract!(
                q.is_none(),
                "ntk kernels derive the degree from eps and lambda; drop --q"
            );
            ntk_gpk_spec(&datasets[0], eps, lambda)?.descriptor()
        }
    }
}

/// Uses the caller's μ when given, otherwise computes the exact statistical
/// dimension of the Gram matrix (small n only).
pub(crate) fn resolve_mu(
    mu: Option<f64>,
    mu_auto: bool,
    desc: &FeatureDescriptor,
    lambda: f64,
) -> Result<f64> {
    if let Some(m) = mu {
        return Ok(m);
    }
    ensure_contract!(mu_auto, "pass --mu or --mu-auto");
    let n = desc.n_cols();
    ensure_contract!(
        n <= EXACT_ORACLE_MAX_N,
        "--mu-auto materializes the exact Gram matrix and needs n <= {EXACT_ORACLE_MAX_N}; \
         pass --mu for larger inputs"
    );
    Ok(statistical_dimension(&exact_gram(desc), lambda)?.max(1.0))
}

fn run_config(core: &CoreArgs, mu: f64, seed: u64) -> SamplerRunConfig {
    SamplerRunConfig {
        eps: core.eps,
        lambda: core.lambda,
        mu,
        c: core.samples_const,
        sampler: core.preset.config(),
        seed,
        cap_exponent: 8.0,
    }
}

fn echo_config(core: &CoreArgs, kernel: &str, trials: usize, threads: Option<usize>) -> ExperimentConfig {
    ExperimentConfig {
        kernel: kernel.to_string(),
        q: None,
        eps: core.eps,
        lambda: core.lambda,
        mu: core.mu,
        mu_auto: core.mu_auto,
        samples_const: core.samples_const,
        seed: core.seed,
        trials,
        threads,
        verify: false,
        format: "csv".to_string(),
        label_column: 0,
        preset: core.preset.name().to_string(),
        data: vec![],
        test_data: None,
        classify: false,
        nnz_grid: vec![],
        runs: None,
        out: None,
    }
}

fn empty_report(command: &str, config: ExperimentConfig) -> Report {
    Report {
        command: command.to_string(),
        library_version: library_version(),
        config,
        mu: None,
        s: None,
        trials: vec![],
        rmse: None,
        exact_rmse: None,
        error_rate: None,
        exact_error_rate: None,
        timings: vec![],
        bench: vec![],
    }
}

fn write_trial_artifacts(
    dir: &Path,
    trial: usize,
    rows: &SampledRows,
    z: &DenseMatrix,
) -> Result<()> {
    let rows_path = dir.join(format!("trial{trial}-rows.json"));
    let json = serde_json::to_string_pretty(rows)
        .map_err(|e| Error::data(format!("sampled-row serialization failed: {e}")))?;
    fs::write(&rows_path, json).map_err(|e| io_err(&rows_path, e))?;

    let mut csv = String::new();
    for r in 0..z.nrows() {
        for c in 0..z.ncols() {
            if c > 0 {
                csv.push(',');
            }
            csv.push_str(&format!("{}", z[(r, c)]));
        }
        csv.push('\n');
    }
    let sketch_path = dir.join(format!("trial{trial}-sketch.csv"));
    fs::write(&sketch_path, csv).map_err(|e| io_err(&sketch_path, e))
}

pub fn cmd_sample(args: &SampleArgs, threads: Option<usize>) -> Result<Report> {
    let mut config = echo_config(&args.core, args.kernel.name(), args.trials, threads);
    config.q = args.q;
    config.verify = args.verify;
    config.format = args.format.name().to_string();
    config.label_column = args.label_column;
    config.data = args.data.iter().map(|p| path_string(p)).collect();
    config.out = args.out.as_ref().map(|p| path_string(p));
    config.validate()?;

    let mut timings = Vec::new();
    let datasets = timed(&mut timings, "ingest", || {
        args.data
            .iter()
            .map(|p| data::ingest(p, args.format, args.label_column).map(|d| d.x))
            .collect::<Result<Vec<_>>>()
    })?;
    let desc = timed(&mut timings, "descriptor", || {
        build_descriptor(args.kernel, args.q, datasets, args.core.eps, args.core.lambda)
    })?;
    let mu = timed(&mut timings, "mu", || {
        resolve_mu(args.core.mu, args.core.mu_auto, &desc, args.core.lambda)
    })?;
    let exact = if args.verify {
        ensure_contract!(
            desc.n_cols() <= EXACT_ORACLE_MAX_N,
            "--verify materializes the exact Gram matrix and needs n <= {EXACT_ORACLE_MAX_N}"
        );
        Some(timed(&mut timings, "gram", || Ok(exact_gram(&desc)))?)
    } else {
        None
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }

    let mut trials = Vec::new();
    let mut s = None;
    let mut sample_secs = 0.0;
    let mut verify_secs = 0.0;
    for t in 0..args.trials {
        let seed = args.core.seed.wrapping_add(t as u64);
        let trial_start = Instant::now();
        let (rows, z) = recursive_leverage_sample(&desc, &run_config(&args.core, mu, seed))?;
        sample_secs += trial_start.elapsed().as_secs_f64();
        s = Some(rows.sample_count);
        let (pass, dev) = match &exact {
            Some(k) => {
                let check_start = Instant::now();
                let (p, d) = spectral_check(k, &z, args.core.lambda, args.core.eps)?;
                verify_secs += check_start.elapsed().as_secs_f64();
                (Some(p), Some(d))
            }
            None => (None, None),
        };
        if let Some(dir) = &args.out {
            write_trial_artifacts(dir, t, &rows, &z)?;
        }
        trials.push(TrialResult {
            seed,
            sandwich_pass: pass,
            max_dev: dev,
            rmse: None,
            error_rate: None,
            seconds: trial_start.elapsed().as_secs_f64(),
        });
    }
    timings.push(StageTiming { stage: "sample".to_string(), seconds: sample_secs });
    if args.verify {
        timings.push(StageTiming { stage: "verify".to_string(), seconds: verify_secs });
    }

    let mut report = empty_report("sample", config);
    report.mu = Some(mu);
    report.s = s;
    report.trials = trials;
    report.timings = timings;
    Ok(report)
}

fn exact_cross_kernel(
    kernel: KernelChoice,
    q: Option<usize>,
    train: &DenseMatrix,
    test: &DenseMatrix,
) -> Result<DenseMatrix> {
    match kernel {
        KernelChoice::Polynomial => {
            let q = q.ok_or_else(|| Error::contract("polynomial kernels need --q"))?;
            Ok(hadamard_pow(&(train.transpose() * test), q))
        }
        KernelChoice::Gaussian => Ok(gaussian_kernel_cross(train, test)),
        KernelChoice::Ntk => ntk_kernel_cross(train, test),
        KernelChoice::Tensor => {
            Err(Error::contract("krr supports the polynomial, gaussian and ntk kernels"))
        }
    }
}

fn exact_square_kernel(kernel: KernelChoice, q: Option<usize>, x: &DenseMatrix) -> Result<DenseMatrix> {
    match kernel {
        KernelChoice::Polynomial => {
            let q = q.ok_or_else(|| Error::contract("polynomial kernels need --q"))?;
            Ok(hadamard_pow(&(x.transpose() * x), q))
        }
        KernelChoice::Gaussian => Ok(gaussian_kernel_exact(x)),
        KernelChoice::Ntk => ntk_kernel_exact(x),
        KernelChoice::Tensor => {
            Err(Error::contract("krr supports the polynomial, gaussian and ntk kernels"))
        }
    }
}

/// LibSVM infers the dimension from the largest index present, so train and
/// test files can disagree by trailing zero features; pad the narrower side.
/// Fixed-width CSV files must match exactly.
fn reconcile_dims(train: &mut Dataset, test: &mut Dataset, format: DataFormat) -> Result<()> {
    let (dt, de) = (train.x.nrows(), test.x.nrows());
    if dt == de {
        return Ok(());
    }
    if format == DataFormat::Libsvm {
        let d = dt.max(de);
        for ds in [train, test] {
            let n = ds.x.ncols();
            let old = std::mem::replace(&mut ds.x, DenseMatrix::zeros(0, 0));
            ds.x = old.resize(d, n, 0.0);
        }
        return Ok(());
    }
    Err(Error::data(format!("train has {dt} features, test has {de}")))
}

fn column_vec(m: &DenseMatrix, c: usize) -> Vec<f64> {
    m.column(c).iter().copied().collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn cmd_krr(args: &KrrArgs, threads: Option<usize>) -> Result<Report> {
    let mut config = echo_config(&args.core, args.kernel.name(), args.trials, threads);
    config.q = args.q;
    config.verify = args.verify;
    config.format = args.format.name().to_string();
    config.label_column = args.label_column;
    config.data = args.data.iter().map(|p| path_string(p)).collect();
    config.test_data = Some(path_string(&args.test_data));
    config.classify = args.classify;
    config.out = args.out.as_ref().map(|p| path_string(p));
    config.validate()?;
    ensure_contract!(
        !matches!(args.kernel, KernelChoice::Tensor),
        "krr supports the polynomial, gaussian and ntk kernels"
    );
    ensure_contract!(args.data.len() == 1, "krr takes exactly one training file");

    let mut timings = Vec::new();
    let (train, test) = timed(&mut timings, "ingest", || {
        let mut train = data::ingest(&args.data[0], args.format, args.label_column)?;
        let mut test = data::ingest(&args.test_data, args.format, args.label_column)?;
        reconcile_dims(&mut train, &mut test, args.format)?;
        Ok((train, test))
    })?;
    let desc = timed(&mut timings, "descriptor", || {
        build_descriptor(args.kernel, args.q, vec![train.x.clone()], args.core.eps, args.core.lambda)
    })?;
    let mu = timed(&mut timings, "mu", || {
        resolve_mu(args.core.mu, args.core.mu_auto, &desc, args.core.lambda)
    })?;
    let cross = timed(&mut timings, "kernel", || {
        exact_cross_kernel(args.kernel, args.q, &train.x, &test.x)
    })?;
    let (targets, classes) = if args.classify {
        let (y, classes) = krr::one_hot(&train.y)?;
        (y, Some(classes))
    } else {
        let n = train.y.len();
        (DenseMatrix::from_fn(n, 1, |i, _| train.y[i]), None)
    };

    let mut trials = Vec::new();
    let mut s = None;
    let mut rmses = Vec::new();
    let mut error_rates = Vec::new();
    let mut fit_secs = 0.0;
    for t in 0..args.trials {
        let seed = args.core.seed.wrapping_add(t as u64);
        let trial_start = Instant::now();
        let (rows, z) = recursive_leverage_sample(&desc, &run_config(&args.core, mu, seed))?;
        s = Some(rows.sample_count);
        let coeffs = krr::fit_sketched(&z, &targets, args.core.lambda)?;
        let scores = krr::predict(&cross, &coeffs)?;
        let mut trial = TrialResult {
            seed,
            sandwich_pass: None,
            max_dev: None,
            rmse: None,
            error_rate: None,
            seconds: 0.0,
        };
        match &classes {
            Some(cs) => {
                let rate = krr::error_rate(&scores, cs, &test.y)?;
                error_rates.push(rate);
                trial.error_rate = Some(rate);
            }
            None => {
                let r = krr::rmse(&column_vec(&scores, 0), &test.y)?;
                rmses.push(r);
                trial.rmse = Some(r);
            }
        }
        trial.seconds = trial_start.elapsed().as_secs_f64();
        fit_secs += trial.seconds;
        trials.push(trial);
    }
    timings.push(StageTiming { stage: "fit".to_string(), seconds: fit_secs });

    let mut exact_rmse = None;
    let mut exact_error_rate = None;
    if args.verify {
        ensure_contract!(
            train.x.ncols() <= EXACT_ORACLE_MAX_N,
            "--verify fits the exact kernel system and needs n <= {EXACT_ORACLE_MAX_N}"
        );
        timed(&mut timings, "verify", || {
            let k_train = exact_square_kernel(args.kernel, args.q, &train.x)?;
            let coeffs = krr::fit_exact(&k_train, &targets, args.core.lambda)?;
            let scores = krr::predict(&cross, &coeffs)?;
            match &classes {
                Some(cs) => exact_error_rate = Some(krr::error_rate(&scores, cs, &test.y)?),
                None => exact_rmse = Some(krr::rmse(&column_vec(&scores, 0), &test.y)?),
            }
            Ok(())
        })?;
    }

    let mut report = empty_report("krr", config);
    report.mu = Some(mu);
    report.s = s;
    report.trials = trials;
    report.rmse = mean(&rmses);
    report.error_rate = mean(&error_rates);
    report.exact_rmse = exact_rmse;
    report.exact_error_rate = exact_error_rate;
    report.timings = timings;
    if let Some(path) = &args.out {
        fs::write(path, report.emit()?).map_err(|e| io_err(path, e))?;
    }
    Ok(report)
}

/// Geometric grid from `min` to `max` (inclusive, rounded); a single point
/// when min == max.
pub(crate) fn geometric_grid(min: usize, max: usize, factor: f64) -> Result<Vec<usize>> {
    ensure_contract!(min >= 1, "nnz grid must start at 1 or above");
    ensure_contract!(max >= min, "nnz-max must not be below nnz-min");
    ensure_contract!(factor > 1.0, "nnz-factor must exceed 1");
    let mut grid = Vec::new();
    let mut v = min as f64;
    while v <= max as f64 * (1.0 + 1e-9) {
        let point = v.round() as usize;
        if grid.last() != Some(&point) {
            grid.push(point);
        }
        v *= factor;
    }
    Ok(grid)
}

pub fn cmd_bench(args: &BenchArgs, threads: Option<usize>) -> Result<Report> {
    let grid = geometric_grid(args.nnz_min, args.nnz_max.unwrap_or(args.nnz_min), args.nnz_factor)?;
    let mut config = echo_config(&args.core, "polynomial", 1, threads);
    config.q = Some(args.q);
    config.nnz_grid = grid.clone();
    config.runs = Some(args.runs);
    config.out = Some(path_string(&args.out));
    config.validate()?;
    ensure_contract!(args.runs >= 1, "need at least one run per grid point");
    ensure_contract!(args.dim >= 1 && args.n >= 2, "need dim >= 1 and n >= 2");
    let budget = args.dim * args.n;
    ensure_contract!(
        *grid.last().expect("grid is nonempty") <= budget,
        "nnz grid exceeds the dim*n = {budget} entry budget"
    );

    let mut timings = Vec::new();
    let mut bench = Vec::new();
    let total = Instant::now();
    for (i, &nnz) in grid.iter().enumerate() {
        let x = data::synth_sparse(args.dim, args.n, nnz, args.core.seed.wrapping_add(i as u64))?;
        let desc = FeatureDescriptor::self_tensor(x, args.q)?;
        let mu = resolve_mu(args.core.mu, args.core.mu_auto, &desc, args.core.lambda)?;
        let mut secs = 0.0;
        for r in 0..args.runs {
            let seed = args.core.seed.wrapping_add(r as u64);
            let start = Instant::now();
            recursive_leverage_sample(&desc, &run_config(&args.core, mu, seed))?;
            secs += start.elapsed().as_secs_f64();
        }
        bench.push(BenchRow {
            nnz,
            stage: "sample".to_string(),
            seconds: secs / args.runs as f64,
        });
    }
    timings.push(StageTiming { stage: "bench".to_string(), seconds: total.elapsed().as_secs_f64() });

    // soft near-linearity check: a doubling of nnz should not much more than
    // double the time; log, never fail
    for w in bench.windows(2) {
        let growth_nnz = w[1].nnz as f64 / w[0].nnz as f64;
        if growth_nnz <= 2.01 && w[0].seconds > 0.0 {
            let growth = w[1].seconds / w[0].seconds;
            if growth > 2.5 {
                log::warn!(
                    "nnz {} -> {}: sampling time grew {growth:.2}x, above the 2.5x soft bound",
                    w[0].nnz,
                    w[1].nnz
                );
            }
        }
    }

    let mut csv = String::new();
    for row in &bench {
        csv.push_str(&format!("{},{},{}\n", row.nnz, row.stage, row.seconds));
    }
    fs::write(&args.out, csv).map_err(|e| io_err(&args.out, e))?;

    let mut report = empty_report("bench", config);
    report.bench = bench;
    report.timings = timings;
    Ok(report)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let dataset = match args.classes {
        Some(k) => {
            data::synth_classification(args.dim, args.n, k, args.r_max, args.spread, args.seed)?
        }
        None => data::synth_regression(args.dim, args.n, args.r_max, args.noise, args.seed)?,
    };
    match args.format {
        DataFormat::Csv => data::write_csv(&args.out, &dataset)?,
        DataFormat::Libsvm => data::write_libsvm(&args.out, &dataset)?,
    }
    log::info!(
        "wrote {} samples of dimension {} to {}",
        args.n,
        args.dim,
        args.out.display()
    );
    Ok(())
}
