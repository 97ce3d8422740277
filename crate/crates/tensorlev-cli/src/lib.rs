//! Command-line surface over the tensorlev sampling library: drawing
//! leverage-score sketches from data files, fitting sketched kernel ridge
//! regression, timing the driver over sparsity grids, and generating the
//! seeded synthetic datasets those runs consume.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use tensorlev::samplers::SamplerConfig;
use tensorlev::Error;

use data::DataFormat;

pub mod commands;
pub mod data;
pub mod krr;
pub mod report;

/// Bails out with `Error::Contract` when `cond` is false.
macro_rules! ensure_contract {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(tensorlev::Error::Contract(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure_contract;

#[derive(Debug, Parser)]
#[command(
    name = "tensorlev",
    version,
    about = "Leverage-score row sampling for tensor-product feature matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for sketch construction; defaults to all cores.
    /// Results are identical for any thread count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw leverage-score samples and write the sketch artifacts.
    Sample(SampleArgs),
    /// Fit kernel ridge regression on sketched features.
    Krr(KrrArgs),
    /// Time the sampling driver over a geometric sparsity grid.
    Bench(BenchArgs),
    /// Generate a seeded synthetic dataset file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    /// Degree-q tensor power of one dataset.
    Polynomial,
    /// Tensor product of several datasets, one file per factor.
    Tensor,
    /// Truncated Gaussian kernel features.
    Gaussian,
    /// Truncated neural-tangent-kernel features.
    Ntk,
}

impl KernelChoice {
    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::Polynomial => "polynomial",
            KernelChoice::Tensor => "tensor",
            KernelChoice::Gaussian => "gaussian",
            KernelChoice::Ntk => "ntk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Constant-1 sketch multipliers.
    Default,
    /// Enlarged sketches for tight tolerances.
    Accurate,
    /// Trimmed sketches for timed batch runs.
    Fast,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Default => "default",
            Preset::Accurate => "accurate",
            Preset::Fast => "fast",
        }
    }

    pub fn config(self) -> SamplerConfig {
        match self {
            Preset::Default => SamplerConfig::default(),
            Preset::Accurate => SamplerConfig::accurate(),
            Preset::Fast => SamplerConfig::fast(),
        }
    }
}

/// Flags shared by every sampling command.
#[derive(Debug, clap::Args)]
pub struct CoreArgs {
    /// Spectral approximation accuracy, in (0,1).
    #[arg(long)]
    pub eps: f64,
    /// Ridge regularizer.
    #[arg(long)]
    pub lambda: f64,
    /// Statistical-dimension bound at lambda; scales the sample count.
    #[arg(long, conflicts_with = "mu_auto")]
    pub mu: Option<f64>,
    /// Compute mu exactly from the Gram matrix (n <= 2000 only).
    #[arg(long)]
    pub mu_auto: bool,
    /// Multiplier C in the per-level sample count s = ceil(C*(mu/eps^2)*log2 n).
    #[arg(long, default_value_t = 4.0)]
    pub samples_const: f64,
    /// Root seed; trial t runs at seed + t.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sketch-size preset trading accuracy against speed.
    #[arg(long, value_enum, default_value_t = Preset::Default)]
    pub preset: Preset,
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub core: CoreArgs,
    /// Kernel family of the feature matrix.
    #[arg(long, value_enum)]
    pub kernel: KernelChoice,
    /// Tensor degree: required for polynomial, optional cross-check for
    /// tensor, and derived from eps and lambda for gaussian/ntk.
    #[arg(long)]
    pub q: Option<usize>,
    /// Input dataset files, one per tensor factor.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Input file format.
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
    /// Zero-based label column for CSV files.
    #[arg(long, default_value_t = 0)]
    pub label_column: usize,
    /// Independent sampler runs at consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Check the spectral sandwich against the exact Gram matrix per trial.
    #[arg(long)]
    pub verify: bool,
    /// Directory receiving trial{t}-rows.json and trial{t}-sketch.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct KrrArgs {
    #[command(flatten)]
    pub core: CoreArgs,
    /// Kernel family; tensor products of distinct datasets are not fittable.
    #[arg(long, value_enum)]
    pub kernel: KernelChoice,
    /// Tensor degree for the polynomial kernel.
    #[arg(long)]
    pub q: Option<usize>,
    /// Training dataset (exactly one file).
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Held-out dataset scored through the exact kernel.
    #[arg(long)]
    pub test_data: PathBuf,
    /// Input file format.
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
    /// Zero-based label column for CSV files.
    #[arg(long, default_value_t = 0)]
    pub label_column: usize,
    /// Independent sketch-and-fit runs at consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// One-hot multi-class fit scored by argmax instead of regression.
    #[arg(long)]
    pub classify: bool,
    /// Also fit the exact-kernel reference system (n <= 2000 only).
    #[arg(long)]
    pub verify: bool,
    /// File receiving a copy of the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub core: CoreArgs,
    /// Tensor degree of the timed polynomial descriptor.
    #[arg(long)]
    pub q: usize,
    /// Ambient dimension of the synthetic dataset.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Number of data points.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Smallest nonzero count in the grid.
    #[arg(long)]
    pub nnz_min: usize,
    /// Largest nonzero count; defaults to nnz-min (single-point grid).
    #[arg(long)]
    pub nnz_max: Option<usize>,
    /// Geometric growth factor between grid points.
    #[arg(long, default_value_t = 2.0)]
    pub nnz_factor: f64,
    /// Timed driver runs averaged per grid point.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// CSV file receiving one nnz,stage,seconds row per grid point.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Feature dimension.
    #[arg(long)]
    pub dim: usize,
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    /// Largest squared column norm after rescaling.
    #[arg(long, default_value_t = 1.0)]
    pub r_max: f64,
    /// Additive label noise for regression data (ignored with --classes).
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Switch to labeled Gaussian blobs with this many classes.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Within-blob spread for classification data.
    #[arg(long, default_value_t = 0.2)]
    pub spread: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file format.
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Process exit code for a library error: contract and configuration
/// problems exit 2 (matching clap's own usage errors), bad data 3,
/// numerical breakdown 4.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) => 2,
        Error::Data(_) => 3,
        Error::Numerical(_) => 4,
    }
}

/// Runs one parsed invocation to completion and returns the exit code.
/// Reports go to stdout, errors to stderr.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: contract violation: threads must be at least 1");
            return 2;
        }
        // the global pool can only be sized once per process; later calls
        // with the same intent are harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let outcome = match &cli.command {
        Command::Sample(args) => commands::cmd_sample(args, cli.threads).map(Some),
        Command::Krr(args) => commands::cmd_krr(args, cli.threads).map(Some),
        Command::Bench(args) => commands::cmd_bench(args, cli.threads).map(Some),
        Command::Synth(args) => commands::cmd_synth(args).map(|()| None),
    };
    match outcome {
        Ok(Some(report)) => match report.emit() {
            Ok(json) => {
                println!("{json}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Ok(None) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
