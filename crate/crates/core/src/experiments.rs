//! Monte Carlo harness: data generation under `y_i = f*(x_i) + w_i`,
//! first-difference noise estimation, single-trial execution applying all
//! four stopping rules, and the rate-law sweep.
//!
//! Reproducibility contract: every random draw comes from a counter-keyed
//! ChaCha8 stream derived from `(seed, trial_id, stream)`, so trials are
//! independent of execution order and safe to run in parallel.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity::{critical_empirical_radius, EmpiricalComplexity};
use crate::descent::{population_norm_error, QuadratureGrid, SpectralSequence, StepSchedule};
use crate::kernels::{build_empirical_kernel, EmpiricalKernel, Kernel};
use crate::stopping::{
    stop_data_dependent, stop_holdout, stop_oracle, stop_sure, StoppingRecord,
};
use crate::{Error, Result};

/// Floor applied to an estimated σ so the stopping criteria stay defined on
/// (near-)noiseless data.
const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignSpec {
    /// `x_i = i/n` for i = 1..n.
    Fixed,
    /// i.i.d. Uniform[0,1), sorted ascending.
    RandomUniform,
}

/// Regression target.
#[derive(Clone)]
pub enum TargetFunction {
    /// `f*(x) = |x − 1/2| − 1/2`.
    AbsShift,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TargetFunction {
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            TargetFunction::AbsShift => libm::fabs(x - 0.5) - 0.5,
            TargetFunction::Custom(f) => f(x),
        }
    }
}

impl core::fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TargetFunction::AbsShift => f.write_str("AbsShift"),
            TargetFunction::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaSource {
    /// Hand the rules the true σ.
    Known,
    /// First-difference estimate from the responses.
    Estimated,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: usize,
    pub design: DesignSpec,
    pub fstar: TargetFunction,
    pub sigma_true: f64,
    pub kernel: Kernel,
    pub schedule: StepSchedule,
    pub trials: usize,
    pub seed: u64,
    pub sigma_source: SigmaSource,
    /// Iteration cap shared by every rule.
    pub cap: usize,
    pub quadrature: QuadratureGrid,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Config(alloc::format!(
                "need n >= 4 for the difference estimator, got {}",
                self.n
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config(alloc::string::String::from(
                "need at least one trial",
            )));
        }
        if self.sigma_true < 0.0 {
            return Err(Error::Config(alloc::format!(
                "noise standard deviation must be nonnegative, got {}",
                self.sigma_true
            )));
        }
        if self.cap == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "iteration cap must be positive",
            )));
        }
        Ok(())
    }
}

// Stream indices for the per-trial RNG keying.
const STREAM_NOISE: u64 = 0;
const STREAM_DESIGN: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

/// ChaCha8 keyed by `(seed, trial_id, stream)` plus a domain tag.
fn trial_rng(seed: u64, trial_id: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial_id.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..32].copy_from_slice(b"earlystp");
    ChaCha8Rng::from_seed(key)
}

fn next_uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits → [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal pairs by Box–Muller.
struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    fn new(rng: ChaCha8Rng) -> Self {
        GaussianStream { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let mut u1 = next_uniform(&mut self.rng);
        while u1 <= 0.0 {
            u1 = next_uniform(&mut self.rng);
        }
        let u2 = next_uniform(&mut self.rng);
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }
}

/// One simulated dataset, design sorted ascending.
#[derive(Clone, Debug)]
pub struct GeneratedData {
    pub design: Vec<f64>,
    pub y: Vec<f64>,
    pub fstar_vals: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Deterministic in `(config.seed, trial_id)`.
pub fn generate_data(config: &ExperimentConfig, trial_id: u64) -> Result<GeneratedData> {
    config.validate()?;
    let n = config.n;
    let mut design: Vec<f64> = match config.design {
        DesignSpec::Fixed => (1..=n).map(|i| i as f64 / n as f64).collect(),
        DesignSpec::RandomUniform => {
            let mut rng = trial_rng(config.seed, trial_id, STREAM_DESIGN);
            (0..n).map(|_| next_uniform(&mut rng)).collect()
        }
    };
    design.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let fstar_vals: Vec<f64> = design.iter().map(|&x| config.fstar.evaluate(x)).collect();
    let mut gauss = GaussianStream::new(trial_rng(config.seed, trial_id, STREAM_NOISE));
    let noise: Vec<f64> = (0..n).map(|_| config.sigma_true * gauss.next()).collect();
    let y: Vec<f64> = fstar_vals.iter().zip(&noise).map(|(&f, &w)| f + w).collect();
    Ok(GeneratedData {
        design,
        y,
        fstar_vals,
        noise,
    })
}

/// First-order difference estimator on design-sorted responses:
/// `σ̂² = [1/(2(n−1))] Σ_{i=2}^n (y_i − y_{i−1})²`.
pub fn estimate_noise_variance(sorted_y: &[f64]) -> Result<f64> {
    let n = sorted_y.len();
    if n < 4 {
        return Err(Error::Config(alloc::format!(
            "difference estimator needs n >= 4, got {n}"
        )));
    }
    let sum: f64 = sorted_y
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum();
    Ok(sum / (2.0 * (n - 1) as f64))
}

/// One stopping rule's outcome plus the errors of the full-sample iterate at
/// its stopping time.
#[derive(Clone, Debug)]
pub struct RuleOutcome {
    pub record: StoppingRecord,
    pub empirical_error: f64,
    pub population_error: f64,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial_id: u64,
    pub data_dependent: RuleOutcome,
    pub hold_out: RuleOutcome,
    pub sure: RuleOutcome,
    pub oracle: RuleOutcome,
    /// Critical empirical radius ε̂_n at the σ the rules used.
    pub eps_hat: f64,
    /// The σ handed to the σ-dependent rules.
    pub sigma_hat: f64,
}

/// Which stopping rules a trial should evaluate. Skipping the hold-out rule
/// in particular avoids a per-trial eigendecomposition of the half-sample.
#[derive(Clone, Copy, Debug)]
pub struct RuleSet {
    pub data_dependent: bool,
    pub hold_out: bool,
    pub sure: bool,
    pub oracle: bool,
}

impl RuleSet {
    pub const ALL: RuleSet = RuleSet {
        data_dependent: true,
        hold_out: true,
        sure: true,
        oracle: true,
    };

    pub const DATA_DEPENDENT_ONLY: RuleSet = RuleSet {
        data_dependent: true,
        hold_out: false,
        sure: false,
        oracle: false,
    };

    pub fn any(&self) -> bool {
        self.data_dependent || self.hold_out || self.sure || self.oracle
    }
}

/// Trial outcome for a chosen subset of rules.
#[derive(Clone, Debug)]
pub struct TrialRuleResults {
    pub trial_id: u64,
    pub data_dependent: Option<RuleOutcome>,
    pub hold_out: Option<RuleOutcome>,
    pub sure: Option<RuleOutcome>,
    pub oracle: Option<RuleOutcome>,
    pub eps_hat: f64,
    pub sigma_hat: f64,
}

/// Shared, immutable per-config state: the fixed-design eigendecomposition
/// is built once and reused by every trial.
pub struct ExperimentContext {
    fixed_kernel: Option<EmpiricalKernel>,
}

impl ExperimentContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let fixed_kernel = match config.design {
            DesignSpec::Fixed => {
                let design: Vec<f64> =
                    (1..=config.n).map(|i| i as f64 / config.n as f64).collect();
                Some(build_empirical_kernel(&config.kernel, &design)?)
            }
            DesignSpec::RandomUniform => None,
        };
        Ok(ExperimentContext { fixed_kernel })
    }
}

fn with_trial_context<T>(trial_id: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Trial {
        trial_id,
        source: alloc::boxed::Box::new(e),
    })
}

/// Runs one trial end to end. Pure in `(config, trial_id)`.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<TrialResult> {
    let ctx = ExperimentContext::new(config)?;
    run_trial_with(&ctx, config, trial_id)
}

/// As [`run_trial`], reusing a prebuilt context across trials.
pub fn run_trial_with(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    trial_id: u64,
) -> Result<TrialResult> {
    let r = run_trial_rules(ctx, config, trial_id, RuleSet::ALL)?;
    Ok(TrialResult {
        trial_id: r.trial_id,
        data_dependent: r.data_dependent.unwrap(),
        hold_out: r.hold_out.unwrap(),
        sure: r.sure.unwrap(),
        oracle: r.oracle.unwrap(),
        eps_hat: r.eps_hat,
        sigma_hat: r.sigma_hat,
    })
}

/// Runs one trial evaluating only the requested rules.
pub fn run_trial_rules(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    trial_id: u64,
    rules: RuleSet,
) -> Result<TrialRuleResults> {
    with_trial_context(trial_id, run_trial_inner(ctx, config, trial_id, rules))
}

fn run_trial_inner(
    ctx: &ExperimentContext,
    config: &ExperimentConfig,
    trial_id: u64,
    rules: RuleSet,
) -> Result<TrialRuleResults> {
    if !rules.any() {
        return Err(Error::Config(alloc::string::String::from(
            "at least one stopping rule must be enabled",
        )));
    }
    let data = generate_data(config, trial_id)?;
    let owned_kernel;
    let ek: &EmpiricalKernel = match (&ctx.fixed_kernel, config.design) {
        (Some(k), DesignSpec::Fixed) => k,
        _ => {
            owned_kernel = build_empirical_kernel(&config.kernel, &data.design)?;
            &owned_kernel
        }
    };

    let sigma = match config.sigma_source {
        SigmaSource::Known => config.sigma_true.max(SIGMA_FLOOR),
        SigmaSource::Estimated => {
            libm::sqrt(estimate_noise_variance(&data.y)?).max(SIGMA_FLOOR)
        }
    };

    let ec = EmpiricalComplexity::new(ek);
    let eps_hat = critical_empirical_radius(&ec, sigma)?.value;

    let rec_dd = if rules.data_dependent {
        Some(stop_data_dependent(&config.schedule, &ec, sigma, config.cap)?)
    } else {
        None
    };
    let rec_su = if rules.sure {
        Some(stop_sure(&config.schedule, ek, &data.y, sigma, config.cap)?)
    } else {
        None
    };
    let rec_or = if rules.oracle {
        Some(stop_oracle(
            &config.schedule,
            ek,
            &data.y,
            &data.fstar_vals,
            config.cap,
        )?)
    } else {
        None
    };

    // Hold-out: seeded shuffle, then first half trains and second half tests.
    let rec_ho = if rules.hold_out {
        let n = config.n;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = trial_rng(config.seed, trial_id, STREAM_SHUFFLE);
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let half = n / 2;
        let pick = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
            idx.iter().map(|&i| (data.design[i], data.y[i])).unzip()
        };
        let (tr_x, tr_y) = pick(&order[..half]);
        let (te_x, te_y) = pick(&order[half..]);
        Some(stop_holdout(
            &tr_x,
            &tr_y,
            &te_x,
            &te_y,
            &config.kernel,
            &config.schedule,
            config.cap,
        )?)
    } else {
        None
    };

    // Evaluate the full-sample iterate at each enabled rule's stopping time.
    let utf = ek.to_eigenbasis(&data.fstar_vals);
    let mut seq = SpectralSequence::new(ek, &config.schedule, &data.y)?;
    let mut stops: Vec<usize> = [&rec_dd, &rec_ho, &rec_su, &rec_or]
        .iter()
        .filter_map(|r| r.as_ref().map(|rec| rec.t))
        .collect();
    stops.sort_unstable();
    stops.dedup();
    let mut emp = alloc::collections::BTreeMap::new();
    let mut pop = alloc::collections::BTreeMap::new();
    for &t in &stops {
        while seq.t() < t {
            seq.advance();
        }
        emp.insert(t, seq.empirical_error_sq(&utf));
        let omega = seq.omega();
        let fstar = &config.fstar;
        pop.insert(
            t,
            population_norm_error(
                &omega,
                ek.design(),
                &config.kernel,
                &|x| fstar.evaluate(x),
                &config.quadrature,
            )?,
        );
    }
    let outcome = |record: Option<StoppingRecord>| -> Option<RuleOutcome> {
        record.map(|record| RuleOutcome {
            empirical_error: emp[&record.t],
            population_error: pop[&record.t],
            record,
        })
    };

    Ok(TrialRuleResults {
        trial_id,
        data_dependent: outcome(rec_dd),
        hold_out: outcome(rec_ho),
        sure: outcome(rec_su),
        oracle: outcome(rec_or),
        eps_hat,
        sigma_hat: sigma,
    })
}

/// One row of the rate sweep.
#[derive(Clone, Copy, Debug)]
pub struct RateRow {
    pub n: usize,
    pub mean_mse: f64,
    /// `mean_mse^{−3/2}`, the quantity expected to be linear in n.
    pub mse_pow: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Present only when the sweep has at least two sample sizes.
    pub fit: Option<LinearFit>,
}

/// Least squares of y on x with the coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Config(alloc::string::String::from(
            "linear fit needs at least two points",
        )));
    }
    let m = x.len() as f64;
    let mx: f64 = x.iter().sum::<f64>() / m;
    let my: f64 = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Config(alloc::string::String::from(
            "rank correlation needs at least two points",
        )));
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut out = alloc::vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
                j += 1;
            }
            let rank = (k + j) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=j] {
                out[i] = rank;
            }
            k = j + 1;
        }
        out
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let fit = linear_fit(&ra, &rb)?;
    let sign = if fit.slope < 0.0 { -1.0 } else { 1.0 };
    Ok(sign * libm::sqrt(fit.r_squared))
}

/// Monte Carlo mean of the population error at T̂ per sample size, with the
/// `MSE^{−3/2}` linearization fit when the sweep has ≥ 2 sizes.
pub fn rate_sweep(template: &ExperimentConfig, n_values: &[usize]) -> Result<RateTable> {
    if n_values.is_empty() {
        return Err(Error::Config(alloc::string::String::from(
            "rate sweep needs at least one sample size",
        )));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(alloc::string::String::from(
            "sample sizes must be strictly ascending",
        )));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut config = template.clone();
        config.n = n;
        let ctx = ExperimentContext::new(&config)?;
        let mut acc = 0.0;
        for trial in 0..config.trials as u64 {
            let result =
                run_trial_rules(&ctx, &config, trial, RuleSet::DATA_DEPENDENT_ONLY)?;
            acc += result.data_dependent.unwrap().population_error;
        }
        let mean_mse = acc / config.trials as f64;
        rows.push(RateRow {
            n,
            mean_mse,
            mse_pow: libm::pow(mean_mse, -1.5),
        });
    }
    let fit = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mse_pow).collect();
        Some(linear_fit(&x, &y)?)
    } else {
        None
    };
    Ok(RateTable { rows, fit })
}
