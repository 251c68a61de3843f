//! Subcommand grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radmax::numeric::Number;

#[derive(Debug, Parser)]
#[command(name = "radmax", version, about = "Spherical maximal operators over fractal dilation sets, radial case")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output file; relative paths resolve against $RADMAX_OUT_DIR when set.
    /// Without it the artifact goes to stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Root seed for randomized estimates.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker thread cap. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dilation set construction.
    #[command(subcommand)]
    Set(SetCommand),
    /// Dimension estimates.
    #[command(subcommand)]
    Dim(DimCommand),
    /// Window-weighted covering growth exponents, with the sandwich check
    /// when the set's dimensions are known.
    Nusharp(NusharpArgs),
    /// Upper Assouad spectrum over a grid of window ratios.
    Spectrum(SpectrumArgs),
    /// Type-set geometry in the (1/p, 1/q) square.
    #[command(subcommand)]
    Region(RegionCommand),
    /// One spherical average of a radial function.
    Avg(AvgArgs),
    /// Maximal function values, or the piece-domination check when --p is given.
    Maximal(MaximalArgs),
    /// Scaling experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Subcommand)]
pub enum SetCommand {
    Make(SetSource),
}

#[derive(Debug, Subcommand)]
pub enum DimCommand {
    /// Minkowski dimension fit and global covering counts.
    Estimate(DimArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    #[value(alias = "full_interval")]
    Full,
    #[value(alias = "finite_points")]
    Points,
    Cantor,
    #[value(alias = "convex_sequence")]
    Convex,
    #[value(alias = "assouad_regular")]
    Regular,
}

/// Either a JSON file (a set from `set make` or a generator spec) or
/// generator flags.
#[derive(Debug, Clone, Args)]
pub struct SetSource {
    #[arg(long, value_name = "FILE", conflicts_with = "generator")]
    pub set_spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorKind>,
    /// Discretization depth; overrides the depth in a generator spec file.
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub base: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub digits: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Option<Vec<f64>>,
    /// Generator exponent (convex, regular).
    #[arg(long, value_name = "R")]
    pub beta: Option<Number>,
    /// Generator Assouad exponent (regular).
    #[arg(long, value_name = "R")]
    pub gamma: Option<Number>,
}

/// Inclusive scale range; defaults to the set's standard fit window.
#[derive(Debug, Clone, Copy, Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub mmin: Option<u32>,
    #[arg(long)]
    pub mmax: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct NusharpArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Comma-separated exponents; default 0, 0.25, ..., 2.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Slack of the sandwich check.
    #[arg(long, default_value_t = 0.1)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Comma-separated ratios in [0,1); default 0, 0.1, ..., 0.9.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum RegionCommand {
    /// Vertex list of the region.
    Vertices(RegionArgs),
    /// Interior / boundary / exterior status of one point.
    Membership(PointArgs),
    /// Boundary polyline for plotting.
    Boundary(BoundaryArgs),
    /// Endpoint-aware verdict for the unclosed type set.
    Classify(ClassifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long, value_name = "R")]
    pub beta: Number,
    #[arg(long, value_name = "R")]
    pub gamma: Option<Number>,
    /// Radial-function region (the quadrangle closure when d = 2).
    #[arg(long)]
    pub radial: bool,
}

/// A point given by its exponents `p, q` (`inf` allowed).
#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[arg(long, value_name = "R")]
    pub p: String,
    #[arg(long, value_name = "R")]
    pub q: String,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub point: ExponentArgs,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = 64)]
    pub resolution: u32,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub d: u32,
    #[command(flatten)]
    pub point: ExponentArgs,
    /// Take the analytic profile from a set file instead of the flags below.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["beta", "gamma"])]
    pub set_spec: Option<PathBuf>,
    #[arg(long, value_name = "R")]
    pub beta: Option<Number>,
    #[arg(long, value_name = "R")]
    pub gamma: Option<Number>,
    /// Whether sup δ^β N(E,δ) is finite.
    #[arg(long)]
    pub sup_finite: bool,
    /// Exponent λ of the logarithmic correction δ^β N(E,δ) ≍ (log 1/δ)^-λ.
    #[arg(long)]
    pub log_decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AvgArgs {
    #[arg(long)]
    pub d: u32,
    /// Radial profile: `indicator:a,b`, `bump:center,width`,
    /// `powerlog:exponent,log_exponent,a,b`, `step:a,b,h;a,b,h;...`, or JSON.
    #[arg(long, visible_alias = "radial", value_name = "FUNCTION")]
    pub function: String,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also estimate by Monte Carlo with this many samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[arg(long)]
    pub d: u32,
    #[arg(long, visible_alias = "radial", value_name = "FUNCTION")]
    pub function: String,
    /// Evaluation radius (value mode).
    #[arg(long, required_unless_present = "p")]
    pub r: Option<f64>,
    /// Lebesgue exponent of the domination check.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 40)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Lp-improving scaling on thin annuli.
    Pq(PqArgs),
    /// Knapp-type annuli adapted to a dyadic window.
    Knapp(KnappArgs),
    /// Lower bound for the average over an annulus of width δ.
    Annulus(AnnulusArgs),
    /// Logarithmic family at p = d/(d-1).
    Stein(SteinArgs),
    /// Grid scan of the necessary-condition functionals.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct PqArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 6)]
    pub kmin: u32,
    #[arg(long, default_value_t = 13)]
    pub kmax: u32,
}

#[derive(Debug, Args)]
pub struct KnappArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0)]
    pub window_level: u32,
    #[arg(long, default_value_t = 0)]
    pub window_position: u64,
    #[arg(long, default_value_t = 4)]
    pub mmin: u32,
    #[arg(long, default_value_t = 12)]
    pub mmax: u32,
}

#[derive(Debug, Args)]
pub struct AnnulusArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 1.0)]
    pub t_left: f64,
    #[arg(long, default_value_t = 1.5)]
    pub t: f64,
    /// δ ranges over 2^-mmin, ..., 2^-mmax.
    #[arg(long, default_value_t = 4)]
    pub mmin: u32,
    #[arg(long, default_value_t = 10)]
    pub mmax: u32,
    /// Offsets c1 placing the radius at r = t - t_left + c1 δ.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.1,-0.05,0,0.05,0.1")]
    pub offsets: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SteinArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 6)]
    pub mmin: u32,
    #[arg(long, default_value_t = 16)]
    pub mmax: u32,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub set: SetSource,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 32)]
    pub resolution: u32,
}
