use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::CostKind;

pub const DEFAULT_N_GRID: &str = "1:20,25:100:5,120:200:20";

/// Transport costs between laws and their empirical measures: Monte Carlo
/// curves, tail tables, deviation envelopes and moment diagnostics.
#[derive(Parser, Debug)]
#[command(name = "otconc", version)]
pub struct Cli {
    /// Worker threads (default: all cores). The OTCONC_THREADS environment
    /// variable takes precedence. Output does not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean transport cost E D_f(mu, mu_N) over an N grid.
    Mean(MeanArgs),
    /// Tail probabilities P(D_f(mu, mu_N) > x) with 95% Wilson intervals.
    Tail(TailArgs),
    /// Overlay a fitted or given envelope on a tail CSV.
    Envelope(EnvelopeArgs),
    /// Moment diagnostics and case selection for a law and cost.
    Check(CheckArgs),
    /// Annular coupling bound for two sampled empirical measures.
    PartitionBound(PartitionArgs),
    /// Tail table of the self-normalized annulus deviation statistic.
    Selfnorm(SelfnormArgs),
    /// Log-log slope of every curve in a mean-cost CSV.
    Slope(SlopeArgs),
    /// Run the built-in figure configurations and write CSVs and SVG plots.
    Figures(FiguresArgs),
}

#[derive(Args, Debug)]
pub struct LawArgs {
    /// gaussian, geometric, poisson, weibull, uniform-ball or point-mass
    #[arg(long)]
    pub dist: String,
    /// Comma-separated k=v pairs: gaussian sigma,d; geometric q; poisson
    /// lambda; weibull c; uniform-ball R,d; point-mass x=x1:x2:...
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(Args, Debug)]
pub struct CostArgs {
    /// f(r) = r^p (power) or e^{a r^p} - 1 (exp)
    #[arg(long, value_enum)]
    pub cost: CostKind,
    #[arg(long)]
    pub p: f64,
    /// Scale of the exponential cost
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Sample sizes: "a", "a:b" or "a:b:step", comma-joined
    #[arg(long, default_value = DEFAULT_N_GRID)]
    pub n_grid: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// quantile-1d (one-dimensional convex costs) or exact-lp:REF (exact
    /// transport to an independent sample of size REF)
    #[arg(long, default_value = "quantile-1d")]
    pub method: String,
    /// Write CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MeanArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct TailArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Deviation levels: values and lo:hi:step ranges, comma-joined
    #[arg(long)]
    pub x_grid: String,
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    /// Tail CSV produced by `tail`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// theorem, meandev-exp-heavy, meandev-exp-light, meandev-moment-high,
    /// meandev-moment-low, or an example case label (see README)
    #[arg(long)]
    pub family: String,
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Cost order (default: the p column of the input)
    #[arg(long)]
    pub p: Option<f64>,
    /// Rate exponent for the theorem family (default: min(1/2, p/d))
    #[arg(long)]
    pub eta: Option<f64>,
    /// Moment exponent for the theorem family
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Slack exponent epsilon
    #[arg(long)]
    pub eps: Option<f64>,
    /// Cutoff A0 of indicator terms
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    /// Exponential-moment order
    #[arg(long)]
    pub beta: Option<f64>,
    /// Polynomial-moment order of a mean-deviation family
    #[arg(long)]
    pub t: Option<f64>,
    /// Polynomial-moment order of an example case
    #[arg(long)]
    pub q: Option<f64>,
    /// Exponential cost scale (default: the a column of the input)
    #[arg(long)]
    pub a: Option<f64>,
    /// Exponential-moment scale
    #[arg(long)]
    pub b: Option<f64>,
    /// Rate constant c; with --C skips fitting
    #[arg(long)]
    pub c: Option<f64>,
    /// Prefactor C; with --c skips fitting
    #[arg(long = "C")]
    pub big_c: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Polynomial moment order assumed finite (power cost)
    #[arg(long)]
    pub q: Option<f64>,
    /// Exponential moment scale b in E e^{b|X|^p} (exp cost)
    #[arg(long)]
    pub b: Option<f64>,
    /// Reduction of eta in the cases that need one
    #[arg(long)]
    pub eps: Option<f64>,
    /// Dyadic weight exponent c0 of the K series
    #[arg(long)]
    pub c0: Option<f64>,
    /// Exponent on the p-th moment in F when gamma <= 2
    #[arg(long)]
    pub f_eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Size of the first sample
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Size of the second sample (default: n)
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Both,
    TrueMinusEmpirical,
    EmpiricalMinusTrue,
}

#[derive(Args, Debug)]
pub struct SelfnormArgs {
    #[command(flatten)]
    pub law: LawArgs,
    /// Self-normalization exponent in (0, 1)
    #[arg(long)]
    pub alpha: f64,
    /// Annulus discount exponent
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Sample sizes, same syntax as --n-grid
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value = "0.1:1.0:0.1")]
    pub x_grid: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SlopeArgs {
    /// Mean-cost CSV produced by `mean` or `figures`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fit window lo:hi in N
    #[arg(long, default_value = "50:200")]
    pub window: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FiguresArgs {
    /// Figure number, 1 to 4
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub fig: u8,
    #[arg(long, default_value = DEFAULT_N_GRID)]
    pub n_grid: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Slope window lo:hi in N
    #[arg(long, default_value = "50:200")]
    pub window: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}
