//! Command implementations. Each command has a pure `compute_*` function
//! returning in-memory results (reused by the test suites) and a `cmd_*`
//! wrapper that writes CSV/SVG artifacts plus a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use earlystop_core::complexity::{critical_empirical_radius, EmpiricalComplexity};
use earlystop_core::descent::{QuadratureGrid, SpectralSequence, StepSchedule};
use earlystop_core::experiments::{
    generate_data, rate_sweep, run_trial_rules, spearman, DesignSpec, ExperimentConfig,
    ExperimentContext, RateTable, RuleSet, SigmaSource, TargetFunction,
};
use earlystop_core::kernels::{build_empirical_kernel, Kernel};
use earlystop_core::ridge::krr_path;
use earlystop_core::stopping::stop_data_dependent;

use crate::args::{
    parse_kernel, CompareArgs, CriticalRadiusArgs, KrrArgs, PathArgs, RateArgs,
};
use crate::csvfmt::{real, CsvWriter};
use crate::manifest::RunManifest;
use crate::svg::{Chart, Series};
use crate::{CliError, Result};

fn experiment_config(
    kernel: Kernel,
    n: usize,
    sigma: f64,
    step: f64,
    seed: u64,
    trials: usize,
    cap: usize,
    quad_points: usize,
) -> Result<ExperimentConfig> {
    let config = ExperimentConfig {
        n,
        design: DesignSpec::Fixed,
        fstar: TargetFunction::AbsShift,
        sigma_true: sigma,
        kernel,
        schedule: StepSchedule::constant(step)?,
        trials,
        seed,
        sigma_source: SigmaSource::Known,
        cap,
        quadrature: QuadratureGrid {
            points: quad_points,
        },
    };
    config.validate()?;
    Ok(config)
}

fn ensure_out_dir(out: &Option<PathBuf>) -> Result<&Path> {
    let dir = out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out <dir> is required".into()))?;
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

fn write_artifact(
    dir: &Path,
    name: &str,
    body: &str,
    manifest: &mut RunManifest,
) -> Result<()> {
    std::fs::write(dir.join(name), body)?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

// ---------------------------------------------------------------- path

pub struct PathRow {
    pub t: usize,
    pub eta: f64,
    pub emp_error: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub sure_risk: f64,
}

/// Trial-averaged error trace over iterations 1..=iters.
pub fn compute_path(
    kernel: Kernel,
    n: usize,
    sigma: f64,
    step: f64,
    iters: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<PathRow>> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let config = experiment_config(kernel, n, sigma, step, seed, trials, iters.max(1), 101)?;
    let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let ek = build_empirical_kernel(&config.kernel, &design)?;
    let r = ek.rank();
    let scale = 2.0 / n as f64;

    let mut acc = vec![[0.0f64; 4]; iters];
    for trial in 0..trials as u64 {
        let data = generate_data(&config, trial)?;
        let utf = ek.to_eigenbasis(&data.fstar_vals);
        let utw = ek.to_eigenbasis(&data.noise);
        let tail: f64 = utf[r..].iter().map(|&v| v * v).sum();
        let mut seq = SpectralSequence::new(&ek, &config.schedule, &data.y)?;
        for row in acc.iter_mut() {
            seq.advance();
            let shrink = seq.shrinkage();
            let mut bias = tail;
            let mut var = 0.0;
            for j in 0..r {
                bias += shrink[j] * shrink[j] * utf[j] * utf[j];
                let g = 1.0 - shrink[j];
                var += g * g * utw[j] * utw[j];
            }
            row[0] += seq.empirical_error_sq(&utf);
            row[1] += scale * bias;
            row[2] += scale * var;
            row[3] += seq.sure_risk(sigma.max(1e-12));
        }
    }

    let inv = 1.0 / trials.max(1) as f64;
    Ok(acc
        .iter()
        .enumerate()
        .map(|(i, row)| PathRow {
            t: i + 1,
            eta: config.schedule.eta(i + 1),
            emp_error: row[0] * inv,
            bias_sq: row[1] * inv,
            variance: row[2] * inv,
            sure_risk: row[3] * inv,
        })
        .collect())
}

pub fn cmd_path(args: &PathArgs) -> Result<()> {
    let started = Instant::now();
    let kernel = parse_kernel(&args.common.kernel)?;
    let rows = compute_path(
        kernel,
        args.n,
        args.common.sigma,
        args.common.step,
        args.iters,
        args.trials,
        args.common.seed,
    )?;

    let dir = ensure_out_dir(&args.common.out)?;
    let mut manifest = RunManifest::new(
        "path",
        json!({
            "kernel": args.common.kernel,
            "n": args.n,
            "sigma": args.common.sigma,
            "step": args.common.step,
            "iters": args.iters,
            "trials": args.trials,
            "svg": args.common.svg,
        }),
        args.common.seed,
    );

    let mut csv = CsvWriter::new(&["t", "eta_t", "emp_error", "bias_sq", "variance", "sure_risk"]);
    for row in &rows {
        csv.row(&[
            row.t.to_string(),
            real(row.eta),
            real(row.emp_error),
            real(row.bias_sq),
            real(row.variance),
            real(row.sure_risk),
        ]);
    }
    write_artifact(dir, "path.csv", &csv.finish(), &mut manifest)?;

    if args.common.svg {
        let chart = Chart {
            title: format!("error trace (n={}, sigma={})", args.n, args.common.sigma),
            x_label: "t".into(),
            y_label: "error".into(),
            log_log: false,
            series: vec![
                series("emp_error", rows.iter().map(|r| (r.t as f64, r.emp_error))),
                series("bias_sq", rows.iter().map(|r| (r.t as f64, r.bias_sq))),
                series("variance", rows.iter().map(|r| (r.t as f64, r.variance))),
                series("sure_risk", rows.iter().map(|r| (r.t as f64, r.sure_risk))),
            ],
        };
        write_artifact(dir, "path.svg", &chart.render(), &mut manifest)?;
    }
    manifest.write(dir, started.elapsed())?;

    if args.common.check {
        let argmin = rows
            .iter()
            .min_by(|a, b| a.emp_error.partial_cmp(&b.emp_error).unwrap())
            .map(|r| r.t)
            .ok_or_else(|| CliError::Check("empty trace".into()))?;
        if !(5..=40).contains(&argmin) {
            return Err(CliError::Check(format!(
                "empirical-error minimum at t={argmin}, outside [5, 40]"
            )));
        }
    }
    Ok(())
}

fn series<I: Iterator<Item = (f64, f64)>>(label: &str, points: I) -> Series {
    Series {
        label: label.into(),
        points: points.collect(),
    }
}

// ---------------------------------------------------------- compare-rules

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RuleName {
    DataDependent,
    HoldOut,
    Sure,
    Oracle,
}

impl RuleName {
    pub fn label(self) -> &'static str {
        match self {
            RuleName::DataDependent => "data_dependent",
            RuleName::HoldOut => "hold_out",
            RuleName::Sure => "sure",
            RuleName::Oracle => "oracle",
        }
    }
}

pub fn parse_rules(names: &[String]) -> Result<(RuleSet, Vec<RuleName>)> {
    let mut set = RuleSet {
        data_dependent: false,
        hold_out: false,
        sure: false,
        oracle: false,
    };
    let mut order = Vec::new();
    for name in names {
        let rule = match name.as_str() {
            "data-dependent" | "dd" => {
                set.data_dependent = true;
                RuleName::DataDependent
            }
            "holdout" | "hold-out" => {
                set.hold_out = true;
                RuleName::HoldOut
            }
            "sure" => {
                set.sure = true;
                RuleName::Sure
            }
            "oracle" => {
                set.oracle = true;
                RuleName::Oracle
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown rule {other:?}; expected data-dependent, holdout, sure, or oracle"
                )))
            }
        };
        if !order.contains(&rule) {
            order.push(rule);
        }
    }
    if order.is_empty() {
        return Err(CliError::Usage("--rules must name at least one rule".into()));
    }
    Ok((set, order))
}

pub struct CompareRow {
    pub n: usize,
    pub rule: RuleName,
    pub mean_mse: f64,
    /// None when a single trial makes the standard error undefined.
    pub stderr_mse: Option<f64>,
    pub mean_t: f64,
}

/// Monte Carlo MSE table per (n, rule); trials fan out over the pool and are
/// folded in trial order.
pub fn compute_compare(
    kernel: &Kernel,
    n_list: &[usize],
    sigma: f64,
    step: f64,
    trials: usize,
    seed: u64,
    cap: usize,
    sigma_source: SigmaSource,
    rules: RuleSet,
    order: &[RuleName],
    pool: &rayon::ThreadPool,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        let mut config =
            experiment_config(kernel.clone(), n, sigma, step, seed, trials, cap, 1001)?;
        config.sigma_source = sigma_source;
        let ctx = ExperimentContext::new(&config)?;
        let results = pool.install(|| {
            (0..trials as u64)
                .into_par_iter()
                .map(|trial| run_trial_rules(&ctx, &config, trial, rules))
                .collect::<earlystop_core::Result<Vec<_>>>()
        })?;

        for &rule in order {
            let mut errors = Vec::with_capacity(trials);
            let mut t_sum = 0.0;
            for r in &results {
                let outcome = match rule {
                    RuleName::DataDependent => r.data_dependent.as_ref(),
                    RuleName::HoldOut => r.hold_out.as_ref(),
                    RuleName::Sure => r.sure.as_ref(),
                    RuleName::Oracle => r.oracle.as_ref(),
                }
                .expect("rule was requested");
                errors.push(outcome.empirical_error);
                t_sum += outcome.record.t as f64;
            }
            let mean = errors.iter().sum::<f64>() / trials as f64;
            let stderr = if trials > 1 {
                let var = errors.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>()
                    / (trials - 1) as f64;
                Some((var / trials as f64).sqrt())
            } else {
                None
            };
            rows.push(CompareRow {
                n,
                rule,
                mean_mse: mean,
                stderr_mse: stderr,
                mean_t: t_sum / trials as f64,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_compare_rules(args: &CompareArgs) -> Result<()> {
    let started = Instant::now();
    let kernel = parse_kernel(&args.common.kernel)?;
    let (rules, order) = parse_rules(&args.rules)?;
    if args.n_list.is_empty() {
        return Err(CliError::Usage("--n-list must be nonempty".into()));
    }
    let pool = crate::pool::build_pool()?;
    let rows = compute_compare(
        &kernel,
        &args.n_list,
        args.common.sigma,
        args.common.step,
        args.trials,
        args.common.seed,
        args.cap,
        if args.estimate_sigma {
            SigmaSource::Estimated
        } else {
            SigmaSource::Known
        },
        rules,
        &order,
        &pool,
    )?;

    let dir = ensure_out_dir(&args.common.out)?;
    let mut manifest = RunManifest::new(
        "compare-rules",
        json!({
            "kernel": args.common.kernel,
            "n_list": args.n_list,
            "sigma": args.common.sigma,
            "step": args.common.step,
            "trials": args.trials,
            "rules": args.rules,
            "cap": args.cap,
            "estimate_sigma": args.estimate_sigma,
            "svg": args.common.svg,
        }),
        args.common.seed,
    );

    let mut csv = CsvWriter::new(&["n", "rule", "mean_mse", "stderr_mse", "mean_T"]);
    for row in &rows {
        csv.row(&[
            row.n.to_string(),
            row.rule.label().to_string(),
            real(row.mean_mse),
            row.stderr_mse.map(real).unwrap_or_default(),
            real(row.mean_t),
        ]);
    }
    write_artifact(dir, "compare.csv", &csv.finish(), &mut manifest)?;

    if args.common.svg {
        let chart = Chart {
            title: "mean MSE by stopping rule".into(),
            x_label: "n".into(),
            y_label: "mean MSE".into(),
            log_log: true,
            series: order
                .iter()
                .map(|&rule| Series {
                    label: rule.label().into(),
                    points: rows
                        .iter()
                        .filter(|r| r.rule == rule)
                        .map(|r| (r.n as f64, r.mean_mse))
                        .collect(),
                })
                .collect(),
        };
        write_artifact(dir, "compare.svg", &chart.render(), &mut manifest)?;
    }
    manifest.write(dir, started.elapsed())?;

    if args.common.check {
        check_compare(&rows, &args.n_list, args.check_slack)?;
    }
    Ok(())
}

/// DataDependent mean MSE within `slack`x of the better of HoldOut and SURE.
pub fn check_compare(rows: &[CompareRow], n_list: &[usize], slack: f64) -> Result<()> {
    for &n in n_list {
        let get = |rule: RuleName| {
            rows.iter()
                .find(|r| r.n == n && r.rule == rule)
                .map(|r| r.mean_mse)
        };
        let dd = get(RuleName::DataDependent)
            .ok_or_else(|| CliError::Usage("check needs the data-dependent rule".into()))?;
        let competitor = get(RuleName::HoldOut)
            .into_iter()
            .chain(get(RuleName::Sure))
            .fold(f64::INFINITY, f64::min);
        if !competitor.is_finite() {
            return Err(CliError::Usage(
                "check needs the holdout or sure rule for comparison".into(),
            ));
        }
        if dd > slack * competitor {
            return Err(CliError::Check(format!(
                "n={n}: data-dependent MSE {dd:.6} exceeds {slack}x best competitor {competitor:.6}"
            )));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- rate

pub fn compute_rate(
    kernel: Kernel,
    n_list: &[usize],
    sigma: f64,
    step: f64,
    trials: usize,
    seed: u64,
    cap: usize,
    quad_points: usize,
) -> Result<RateTable> {
    let template = experiment_config(
        kernel,
        n_list.iter().copied().max().unwrap_or(4).max(4),
        sigma,
        step,
        seed,
        trials,
        cap,
        quad_points,
    )?;
    Ok(rate_sweep(&template, n_list)?)
}

pub fn cmd_rate(args: &RateArgs) -> Result<()> {
    let started = Instant::now();
    let kernel = parse_kernel(&args.common.kernel)?;
    if args.n_list.is_empty() {
        return Err(CliError::Usage("--n-list must be nonempty".into()));
    }
    let table = compute_rate(
        kernel,
        &args.n_list,
        args.common.sigma,
        args.common.step,
        args.trials,
        args.common.seed,
        args.cap,
        args.quad_points,
    )?;

    let dir = ensure_out_dir(&args.common.out)?;
    let mut manifest = RunManifest::new(
        "rate",
        json!({
            "kernel": args.common.kernel,
            "n_list": args.n_list,
            "sigma": args.common.sigma,
            "step": args.common.step,
            "trials": args.trials,
            "cap": args.cap,
            "quad_points": args.quad_points,
            "svg": args.common.svg,
        }),
        args.common.seed,
    );

    let mut csv = CsvWriter::new(&["n", "mean_mse", "mse_pow"]);
    for row in &table.rows {
        csv.row(&[row.n.to_string(), real(row.mean_mse), real(row.mse_pow)]);
    }
    write_artifact(dir, "rate.csv", &csv.finish(), &mut manifest)?;

    let mut fit_csv = CsvWriter::new(&["slope", "intercept", "r_squared"]);
    if let Some(fit) = &table.fit {
        fit_csv.row(&[real(fit.slope), real(fit.intercept), real(fit.r_squared)]);
    }
    write_artifact(dir, "fit.csv", &fit_csv.finish(), &mut manifest)?;

    if args.common.svg {
        let chart = Chart {
            title: "MSE^(-3/2) vs n".into(),
            x_label: "n".into(),
            y_label: "MSE^(-3/2)".into(),
            log_log: false,
            series: vec![series(
                "mse_pow",
                table.rows.iter().map(|r| (r.n as f64, r.mse_pow)),
            )],
        };
        write_artifact(dir, "rate.svg", &chart.render(), &mut manifest)?;
    }
    manifest.write(dir, started.elapsed())?;

    if args.common.check {
        let fit = table.fit.as_ref().ok_or_else(|| {
            CliError::Usage("--check needs at least two sample sizes".into())
        })?;
        if fit.r_squared < args.check_r2 {
            return Err(CliError::Check(format!(
                "linear-fit R^2 = {:.4} below {:.4}",
                fit.r_squared, args.check_r2
            )));
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ krr

pub struct KrrComparison {
    /// (ν, empirical error of f̂_ν).
    pub krr: Vec<(f64, f64)>,
    /// (t, η_t, empirical error of f^t).
    pub descent: Vec<(usize, f64, f64)>,
    pub spearman: f64,
}

/// Ridge path over the integer grid ν ∈ 1..=max_nu versus the descent path
/// over t ∈ 1..=max_nu; error curves are averaged over trials before the
/// rank correlation is taken.
pub fn compute_krr(
    kernel: Kernel,
    n: usize,
    sigma: f64,
    step: f64,
    seed: u64,
    max_nu: usize,
    trials: usize,
) -> Result<KrrComparison> {
    if max_nu == 0 {
        return Err(CliError::Usage("--max-nu must be positive".into()));
    }
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let config = experiment_config(kernel, n, sigma, step, seed, trials, max_nu, 101)?;
    let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let ek = build_empirical_kernel(&config.kernel, &design)?;
    let grid: Vec<f64> = (1..=max_nu).map(|v| v as f64).collect();

    let mut krr_acc = vec![0.0f64; max_nu];
    let mut descent_acc = vec![0.0f64; max_nu];
    for trial in 0..trials as u64 {
        let data = generate_data(&config, trial)?;
        let path = krr_path(&ek, &data.y, &grid, Some(&data.fstar_vals))?;
        for (acc, e) in krr_acc.iter_mut().zip(path.errors.expect("targets were supplied")) {
            *acc += e;
        }
        let utf = ek.to_eigenbasis(&data.fstar_vals);
        let mut seq = SpectralSequence::new(&ek, &config.schedule, &data.y)?;
        for acc in descent_acc.iter_mut() {
            seq.advance();
            *acc += seq.empirical_error_sq(&utf);
        }
    }
    let inv = 1.0 / trials as f64;
    let krr: Vec<(f64, f64)> = grid
        .iter()
        .zip(&krr_acc)
        .map(|(&nu, &e)| (nu, e * inv))
        .collect();
    let descent: Vec<(usize, f64, f64)> = descent_acc
        .iter()
        .enumerate()
        .map(|(i, &e)| (i + 1, config.schedule.eta(i + 1), e * inv))
        .collect();

    let a: Vec<f64> = krr.iter().map(|&(_, e)| e).collect();
    let b: Vec<f64> = descent.iter().map(|&(_, _, e)| e).collect();
    let rho = spearman(&a, &b)?;
    Ok(KrrComparison {
        krr,
        descent,
        spearman: rho,
    })
}

pub fn cmd_krr(args: &KrrArgs) -> Result<()> {
    let started = Instant::now();
    let kernel = parse_kernel(&args.common.kernel)?;
    let cmp = compute_krr(
        kernel,
        args.n,
        args.common.sigma,
        args.common.step,
        args.common.seed,
        args.max_nu,
        args.trials,
    )?;

    let dir = ensure_out_dir(&args.common.out)?;
    let mut manifest = RunManifest::new(
        "krr",
        json!({
            "kernel": args.common.kernel,
            "n": args.n,
            "sigma": args.common.sigma,
            "step": args.common.step,
            "max_nu": args.max_nu,
            "trials": args.trials,
            "svg": args.common.svg,
        }),
        args.common.seed,
    );

    // Two labelled blocks: ridge rows carry ν in both index and eta columns.
    let mut csv = CsvWriter::new(&["series", "index", "eta", "error"]);
    for &(nu, err) in &cmp.krr {
        csv.row(&["krr".into(), real(nu), real(nu), real(err)]);
    }
    for &(t, eta, err) in &cmp.descent {
        csv.row(&["descent".into(), t.to_string(), real(eta), real(err)]);
    }
    write_artifact(dir, "krr.csv", &csv.finish(), &mut manifest)?;

    let mut summary = CsvWriter::new(&["spearman"]);
    summary.row(&[real(cmp.spearman)]);
    write_artifact(dir, "summary.csv", &summary.finish(), &mut manifest)?;

    if args.common.svg {
        let chart = Chart {
            title: "KRR path vs descent path".into(),
            x_label: "nu (or eta_t)".into(),
            y_label: "empirical error".into(),
            log_log: false,
            series: vec![
                series("krr", cmp.krr.iter().map(|&(nu, e)| (nu, e))),
                series("descent", cmp.descent.iter().map(|&(_, eta, e)| (eta, e))),
            ],
        };
        write_artifact(dir, "krr.svg", &chart.render(), &mut manifest)?;
    }
    manifest.write(dir, started.elapsed())?;

    println!("spearman = {}", real(cmp.spearman));
    if args.common.check && cmp.spearman < 0.8 {
        return Err(CliError::Check(format!(
            "spearman rank correlation {:.4} below 0.8",
            cmp.spearman
        )));
    }
    Ok(())
}

// ------------------------------------------------------- critical-radius

pub struct CriticalRadiusReport {
    pub eps_hat: f64,
    pub residual: f64,
    pub t_hat: usize,
    pub triggered: bool,
}

pub fn compute_critical_radius(
    kernel: Kernel,
    n: usize,
    sigma: f64,
    step: f64,
) -> Result<CriticalRadiusReport> {
    let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let ek = build_empirical_kernel(&kernel, &design)?;
    let ec = EmpiricalComplexity::new(&ek);
    let radius = critical_empirical_radius(&ec, sigma)?;
    let schedule = StepSchedule::constant(step)?;
    let record = stop_data_dependent(&schedule, &ec, sigma, 10_000_000)?;
    Ok(CriticalRadiusReport {
        eps_hat: radius.value,
        residual: radius.residual,
        t_hat: record.t,
        triggered: record.triggered,
    })
}

pub fn cmd_critical_radius(args: &CriticalRadiusArgs) -> Result<()> {
    let started = Instant::now();
    let kernel = parse_kernel(&args.common.kernel)?;
    let report = compute_critical_radius(kernel, args.n, args.common.sigma, args.common.step)?;

    println!("eps_hat  = {}", real(report.eps_hat));
    println!("residual = {}", real(report.residual));
    println!("T_hat    = {}{}", report.t_hat, if report.triggered { "" } else { " (cap)" });

    if let Some(dir) = &args.common.out {
        std::fs::create_dir_all(dir)?;
        let mut manifest = RunManifest::new(
            "critical-radius",
            json!({
                "kernel": args.common.kernel,
                "n": args.n,
                "sigma": args.common.sigma,
                "step": args.common.step,
            }),
            args.common.seed,
        );
        let mut csv = CsvWriter::new(&["eps_hat", "residual", "t_hat", "triggered"]);
        csv.row(&[
            real(report.eps_hat),
            real(report.residual),
            report.t_hat.to_string(),
            report.triggered.to_string(),
        ]);
        write_artifact(dir, "critical_radius.csv", &csv.finish(), &mut manifest)?;
        manifest.write(dir, started.elapsed())?;
    }
    Ok(())
}
