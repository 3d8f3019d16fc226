//! Flag definitions and parsing of the small kernel mini-language.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use earlystop_core::kernels::Kernel;

use crate::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "earlystop",
    version,
    about = "Early-stopped gradient descent for kernel regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single-configuration error trace over iterations.
    Path(PathArgs),
    /// Monte Carlo comparison of the four stopping rules.
    CompareRules(CompareArgs),
    /// Rate-law sweep over sample sizes.
    Rate(RateArgs),
    /// Kernel ridge path versus the descent path.
    Krr(KrrArgs),
    /// Critical radius and stopping time for one configuration.
    CriticalRadius(CriticalRadiusArgs),
}

/// `sobolev1`, `gaussian:<bandwidth>`, or `poly:<degree>`.
pub fn parse_kernel(spec: &str) -> Result<Kernel> {
    if spec == "sobolev1" {
        return Ok(Kernel::first_order_sobolev());
    }
    if let Some(bw) = spec.strip_prefix("gaussian:") {
        let bw: f64 = bw
            .parse()
            .map_err(|_| CliError::Usage(format!("bad gaussian bandwidth in {spec:?}")))?;
        return Ok(Kernel::gaussian(bw)?);
    }
    if let Some(d) = spec.strip_prefix("poly:") {
        let d: u32 = d
            .parse()
            .map_err(|_| CliError::Usage(format!("bad polynomial degree in {spec:?}")))?;
        return Ok(Kernel::polynomial(d)?);
    }
    Err(CliError::Usage(format!(
        "unknown kernel {spec:?}; expected sobolev1, gaussian:<bw>, or poly:<d>"
    )))
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Kernel spec: sobolev1 | gaussian:<bw> | poly:<d>.
    #[arg(long, default_value = "sobolev1")]
    pub kernel: String,

    /// Noise standard deviation σ.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Constant step size α.
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,

    /// Base seed for the trial RNG streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also emit an SVG line chart.
    #[arg(long, default_value_t = false)]
    pub svg: bool,

    /// Validate the command's acceptance threshold; exit 4 on failure.
    #[arg(long, default_value_t = false)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Iterations to trace.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,

    /// Trials to average the traces over.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sample sizes, e.g. 50,100,200.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "50,100,200")]
    pub n_list: Vec<usize>,

    /// Trials per sample size.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Rules to evaluate (comma-separated subset of
    /// data-dependent,holdout,sure,oracle).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "data-dependent,holdout,sure,oracle"
    )]
    pub rules: Vec<String>,

    /// Iteration cap shared by every rule.
    #[arg(long, default_value_t = 1000)]
    pub cap: usize,

    /// Estimate the noise level from first differences instead of using
    /// --sigma (the rules see the estimate; data generation still uses
    /// --sigma).
    #[arg(long = "estimate-sigma", default_value_t = false)]
    pub estimate_sigma: bool,

    /// Slack factor enforced by --check: the data-dependent rule's mean MSE
    /// must stay within this multiple of the better of hold-out and SURE.
    #[arg(long = "check-slack", default_value_t = 1.2)]
    pub check_slack: f64,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sample sizes, ascending.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "50,100,200,300")]
    pub n_list: Vec<usize>,

    /// Trials per sample size.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Iteration cap for the stopping rule.
    #[arg(long, default_value_t = 2000)]
    pub cap: usize,

    /// Quadrature points for the population error.
    #[arg(long = "quad-points", default_value_t = 10_001)]
    pub quad_points: usize,

    /// R² threshold enforced by --check.
    #[arg(long = "check-r2", default_value_t = 0.95)]
    pub check_r2: f64,
}

#[derive(Args, Debug)]
pub struct KrrArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Largest ν on the integer grid 1..=max-nu, matched by t ∈ 1..=max-nu.
    #[arg(long = "max-nu", default_value_t = 100)]
    pub max_nu: usize,

    /// Trials to average the error curves over.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct CriticalRadiusArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}
