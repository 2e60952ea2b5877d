use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "diffcurv",
    version,
    about = "Diffusion curvature of point clouds and Hessian probing"
)]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic surface with its analytic Gaussian curvature.
    Gen(GenArgs),
    /// Build the diffusion operator and embedding of a cloud.
    Operator(OperatorArgs),
    /// Pointwise diffusion curvature of a cloud.
    Curvature(CurvatureArgs),
    /// Describe a training corpus of random quadrics.
    Corpus(CorpusArgs),
    /// Train the quadric regressor.
    Train(TrainArgs),
    /// Held-out coefficient error against the random baseline.
    Eval(EvalArgs),
    /// Estimate the Hessian around a critical point.
    Probe(ProbeArgs),
    /// Batch experiments and spectrum summaries.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceKind {
    Sphere,
    Torus,
    Ellipsoid,
    #[value(alias = "saddle")]
    HyperbolicParaboloid,
    Hyperboloid,
    Plane,
    QuadricGraph,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub surface: SurfaceKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Sphere radius, or patch radius for graph surfaces.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Torus major radius.
    #[arg(long = "R", default_value_t = 2.0)]
    pub major: f64,
    /// Torus minor radius.
    #[arg(long = "r", default_value_t = 1.0)]
    pub minor: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Saddle scale in `z = scale (x^2 - y^2)`.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Hyperboloid half-height.
    #[arg(long, default_value_t = 1.0)]
    pub height: f64,
    /// Quadric graph matrix entries.
    #[arg(long, default_value_t = 1.0)]
    pub q11: f64,
    #[arg(long, default_value_t = 0.0)]
    pub q12: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q22: f64,
}

#[derive(Debug, Args, Clone)]
pub struct KernelArgs {
    /// Fixed Gaussian bandwidth (overrides --knn).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Neighbour rank of the adaptive bandwidth (default ceil(log2 N)).
    #[arg(long)]
    pub knn: Option<usize>,
    /// Anisotropic density normalization exponent.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Zero affinities below 1e-12.
    #[arg(long)]
    pub truncate: bool,
}

#[derive(Debug, Args, Clone)]
pub struct CurvatureParamArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 8)]
    pub t: u32,
    /// Per-point diffusion-distance quantile defining the ball radius.
    #[arg(long, default_value_t = 0.1)]
    pub r_quantile: f64,
    /// Fixed ball radius shared by all points (overrides --r-quantile).
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Cloud CSV or DCPC binary.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 1)]
    pub t: u32,
    /// Number of eigenpairs kept (default all).
    #[arg(long)]
    pub eigenpairs: Option<usize>,
    /// Diffusion coordinates written per point.
    #[arg(long, default_value_t = 10)]
    pub coords: usize,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub params: CurvatureParamArgs,
    /// CSV with a reference curvature column (e.g. `gen`'s curvature.csv).
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct CorpusParamArgs {
    #[arg(long, default_value_t = 500)]
    pub quadrics: usize,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,5")]
    pub dims: Vec<usize>,
    /// Side length of the padded coefficient matrix (default: largest dim).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub coeff_range: f64,
    #[arg(long, default_value_t = 1.0)]
    pub domain_radius: f64,
    #[arg(long, default_value_t = 25)]
    pub d_emb: usize,
    #[arg(long, default_value_t = 8)]
    pub t: u32,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[command(flatten)]
    pub corpus: CorpusParamArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus description written by `corpus`; otherwise built from the flags.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub params: CorpusParamArgs,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// L1 weight on predicted coefficients.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub encoder: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub head: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// DCNN checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// Held-out corpus description; otherwise built from the flags.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub params: CorpusParamArgs,
    /// Random-baseline draws per held-out quadric.
    #[arg(long, default_value_t = 100)]
    pub baseline_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    Ls,
    Net,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Built-in objective: bowl, cap, saddle2d, alternating, cubic, toy-regression.
    #[arg(long, conflicts_with = "samples_csv")]
    pub objective: Option<String>,
    /// CSV of precomputed rows `x_0, ..., x_{k-1}, f(x)` around the center.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// Comma-separated critical point (default: the objective's own, or the origin).
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    /// Objective value at the center, for CSV input without a center row.
    #[arg(long)]
    pub center_value: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub radius_scale: f64,
    /// Relative loss change tolerated by the locality check.
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "ls")]
    pub estimator: EstimatorKind,
    /// DCNN checkpoint for `--estimator net`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Sample on the sphere of radius rho instead of the ball.
    #[arg(long)]
    pub shell: bool,
    /// Label used in the spectrum files.
    #[arg(long, default_value = "probe")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(subcommand)]
    pub kind: ReportKind,
}

#[derive(Debug, Subcommand)]
pub enum ReportKind {
    /// Mean interior curvature of sphere, plane and saddle over seeded trials.
    Ordering {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        params: CurvatureParamArgs,
    },
    /// Diffusion vs Gaussian curvature on the quadric test surfaces.
    Correlation {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        params: CurvatureParamArgs,
    },
    /// Eigenspectrum summary of several probe results.
    Spectrum {
        /// `hessian.json` files written by `probe`.
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// One label per input (default: file stem of the parent directory).
        #[arg(long, num_args = 1..)]
        labels: Vec<String>,
    },
}
