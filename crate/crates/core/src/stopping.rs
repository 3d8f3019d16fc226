//! The four stopping rules: the data-dependent rule driven by local
//! Rademacher complexity, and the hold-out, SURE, and oracle competitors.
//!
//! All three competitor rules follow the literal first-increase definition
//! `T = (first t with risk(f^{t+1}) > risk(f^t)) − 1`. When the very first
//! comparison already increases the literal value is −1; we clamp to 0 and
//! set [`StoppingRecord::clamped`]. (The −1 may read as stopping one step
//! before the first observed increase; we do not second-guess it.)

use alloc::vec::Vec;

use crate::complexity::{EmpiricalComplexity, EMPIRICAL_PREFACTOR};
use crate::descent::{SpectralSequence, StepSchedule};
use crate::kernels::{build_empirical_kernel, EmpiricalKernel, Kernel};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingRule {
    DataDependent,
    HoldOut,
    Sure,
    Oracle,
}

/// Outcome of a stopping rule.
#[derive(Clone, Debug)]
pub struct StoppingRecord {
    pub rule: StoppingRule,
    /// The stopping iteration `T ≥ 0`.
    pub t: usize,
    /// The per-iteration values the rule actually compared. For the
    /// data-dependent rule this is the normalized criterion
    /// `2eσ η_t R̂(1/√η_t)` (fires when it exceeds 1), indexed from t = 1;
    /// for the others it is the risk trace indexed from t = 0.
    pub risk_trace: Vec<f64>,
    /// False when the iteration cap was reached without the rule firing.
    pub triggered: bool,
    /// True when a literal −1 was clamped to 0.
    pub clamped: bool,
}

/// `T̂ = (first t ≥ 1 with R̂(1/√η_t) > 1/(2eσ η_t)) − 1`. Uniqueness comes
/// from the monotonicity of `η ↦ η R̂(1/√η)`; evaluation starts at t = 1
/// because `η_0 = 0` degenerates the criterion.
pub fn stop_data_dependent(
    schedule: &StepSchedule,
    ec: &EmpiricalComplexity<'_>,
    sigma: f64,
    cap: usize,
) -> Result<StoppingRecord> {
    if !(sigma > 0.0) {
        return Err(Error::Config(alloc::format!(
            "noise level must be positive, got {sigma}"
        )));
    }
    if ec.lambda1() <= 0.0 {
        return Err(Error::DegenerateKernel);
    }
    let mut trace = Vec::new();
    for t in 1..=cap {
        let eta = schedule.eta(t);
        if eta <= 0.0 {
            trace.push(0.0);
            continue;
        }
        // η R̂(1/√η) is nondecreasing in η, so the first crossing is unique.
        let criterion = EMPIRICAL_PREFACTOR * sigma * ec.eta_scaled(eta);
        trace.push(criterion);
        if criterion > 1.0 {
            return Ok(StoppingRecord {
                rule: StoppingRule::DataDependent,
                t: t - 1,
                risk_trace: trace,
                triggered: true,
                clamped: false,
            });
        }
    }
    Ok(StoppingRecord {
        rule: StoppingRule::DataDependent,
        t: cap,
        risk_trace: trace,
        triggered: false,
        clamped: false,
    })
}

/// Scans `trace[0..]` for the first increase and applies the literal
/// minus-one, clamped at zero.
fn first_increase(rule: StoppingRule, trace: Vec<f64>, cap: usize) -> StoppingRecord {
    for i in 0..trace.len().saturating_sub(1) {
        if trace[i + 1] > trace[i] {
            return StoppingRecord {
                rule,
                t: i.saturating_sub(1),
                risk_trace: trace,
                triggered: true,
                clamped: i == 0,
            };
        }
    }
    StoppingRecord {
        rule,
        t: cap,
        risk_trace: trace,
        triggered: false,
        clamped: false,
    }
}

/// Hold-out rule: descent runs on the training half only; the risk is the
/// mean squared prediction error on the held-out half, with predictions made
/// off-design through the representer expansion.
pub fn stop_holdout(
    train_design: &[f64],
    train_y: &[f64],
    test_design: &[f64],
    test_y: &[f64],
    kernel: &Kernel,
    schedule: &StepSchedule,
    cap: usize,
) -> Result<StoppingRecord> {
    if train_design.len() != train_y.len() {
        return Err(Error::LengthMismatch {
            left: train_design.len(),
            right: train_y.len(),
        });
    }
    if test_design.len() != test_y.len() {
        return Err(Error::LengthMismatch {
            left: test_design.len(),
            right: test_y.len(),
        });
    }
    let ek = build_empirical_kernel(kernel, train_design)?;
    let m = ek.n();
    // The builder sorts the design; carry the responses along.
    let y_tr: Vec<f64> = ek.permutation().iter().map(|&i| train_y[i]).collect();

    let m_te = test_design.len();
    let sqrt_m = libm::sqrt(m as f64);
    // cross[j*m + i] = 𝕂(x_te_j, x_tr_i) / √m, so f^t(x_te_j) = Σ_i cross·ω_i.
    let mut cross = Vec::with_capacity(m_te * m);
    for &xt in test_design {
        for &xi in ek.design() {
            cross.push(kernel.evaluate(xt, xi) / sqrt_m);
        }
    }

    let test_risk = |omega: &[f64]| -> f64 {
        let mut acc = 0.0;
        for j in 0..m_te {
            let mut pred = 0.0;
            for i in 0..m {
                pred += cross[j * m + i] * omega[i];
            }
            let d = test_y[j] - pred;
            acc += d * d;
        }
        acc / m_te as f64
    };

    // Spectral path so the weights stay on the range of K (the
    // pseudoinverse convention) even for rank-deficient train kernels.
    let mut seq = SpectralSequence::new(&ek, schedule, &y_tr)?;
    let mut trace = alloc::vec![test_risk(&seq.omega())];
    for _ in 0..cap {
        seq.advance();
        let risk = test_risk(&seq.omega());
        let prev = *trace.last().unwrap();
        trace.push(risk);
        if risk > prev {
            break;
        }
    }
    Ok(first_increase(StoppingRule::HoldOut, trace, cap))
}

/// Stein's unbiased risk estimate at iteration `t`:
/// `R_SU = (1/n){ nσ² + Yᵀ(S̃^t)²Y − 2σ² trace(S̃^t) }` with
/// `S̃^t = Π_{τ<t}(I − α_τ K)`, computed spectrally. The diagonal keeps unit
/// entries on the null space of `K`, so the trace runs over all n directions.
pub fn sure_risk(
    schedule: &StepSchedule,
    kernel: &EmpiricalKernel,
    y: &[f64],
    sigma: f64,
    t: usize,
) -> Result<f64> {
    let mut seq = SpectralSequence::new(kernel, schedule, y)?;
    for _ in 0..t {
        seq.advance();
    }
    Ok(seq.sure_risk(sigma))
}

/// First-increase rule on the SURE trace.
pub fn stop_sure(
    schedule: &StepSchedule,
    kernel: &EmpiricalKernel,
    y: &[f64],
    sigma: f64,
    cap: usize,
) -> Result<StoppingRecord> {
    if !(sigma > 0.0) {
        return Err(Error::Config(alloc::format!(
            "noise level must be positive, got {sigma}"
        )));
    }
    let mut seq = SpectralSequence::new(kernel, schedule, y)?;
    let mut trace = alloc::vec![seq.sure_risk(sigma)];
    for _ in 0..cap {
        seq.advance();
        let risk = seq.sure_risk(sigma);
        let prev = *trace.last().unwrap();
        trace.push(risk);
        if risk > prev {
            break;
        }
    }
    Ok(first_increase(StoppingRule::Sure, trace, cap))
}

/// First-increase rule on the true empirical error `‖f^t − f*‖_n²`
/// (simulation-only diagnostic).
pub fn stop_oracle(
    schedule: &StepSchedule,
    kernel: &EmpiricalKernel,
    y: &[f64],
    fstar_vals: &[f64],
    cap: usize,
) -> Result<StoppingRecord> {
    if fstar_vals.len() != kernel.n() {
        return Err(Error::LengthMismatch {
            left: fstar_vals.len(),
            right: kernel.n(),
        });
    }
    let utf = kernel.to_eigenbasis(fstar_vals);
    let mut seq = SpectralSequence::new(kernel, schedule, y)?;
    let mut trace = alloc::vec![seq.empirical_error_sq(&utf)];
    for _ in 0..cap {
        seq.advance();
        let risk = seq.empirical_error_sq(&utf);
        let prev = *trace.last().unwrap();
        trace.push(risk);
        if risk > prev {
            break;
        }
    }
    Ok(first_increase(StoppingRule::Oracle, trace, cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::critical_empirical_radius;
    use crate::linalg::matvec;

    fn sobolev(n: usize) -> EmpiricalKernel {
        let k = Kernel::first_order_sobolev();
        let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        build_empirical_kernel(&k, &design).unwrap()
    }

    /// Literal scan of the data-dependent inequality.
    fn scan_data_dependent(
        schedule: &StepSchedule,
        ec: &EmpiricalComplexity<'_>,
        sigma: f64,
        cap: usize,
    ) -> usize {
        for t in 1..=cap {
            let eta = schedule.eta(t);
            let eps = 1.0 / libm::sqrt(eta);
            if ec.value(eps) > 1.0 / (EMPIRICAL_PREFACTOR * sigma * eta) {
                return t - 1;
            }
        }
        cap
    }

    #[test]
    fn degenerate_kernel_never_stops() {
        let eigs = [0.0, 0.0, 0.0];
        let ec = EmpiricalComplexity::from_parts(&eigs, 3);
        let schedule = StepSchedule::constant(0.5).unwrap();
        let err = stop_data_dependent(&schedule, &ec, 1.0, 100).unwrap_err();
        assert!(matches!(err, Error::DegenerateKernel));
    }

    #[test]
    fn data_dependent_matches_literal_scan() {
        let eigs = [1.0, 0.25];
        let ec = EmpiricalComplexity::from_parts(&eigs, 2);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let rec = stop_data_dependent(&schedule, &ec, 1.0, 10_000).unwrap();
        assert!(rec.triggered);
        assert_eq!(rec.t, scan_data_dependent(&schedule, &ec, 1.0, 10_000));

        // And on a larger Sobolev instance with a different σ.
        let ek = sobolev(60);
        let ec2 = EmpiricalComplexity::new(&ek);
        let rec2 = stop_data_dependent(&schedule, &ec2, 0.5, 100_000).unwrap();
        assert!(rec2.triggered);
        assert_eq!(rec2.t, scan_data_dependent(&schedule, &ec2, 0.5, 100_000));
    }

    #[test]
    fn doubling_sigma_weakly_decreases_t() {
        let ek = sobolev(40);
        let ec = EmpiricalComplexity::new(&ek);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let mut prev = usize::MAX;
        for sigma in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let rec = stop_data_dependent(&schedule, &ec, sigma, 1_000_000).unwrap();
            assert!(rec.triggered);
            assert!(rec.t <= prev, "sigma={sigma} t={} prev={prev}", rec.t);
            prev = rec.t;
        }
    }

    #[test]
    fn sandwich_and_doubling_bounds() {
        // 1/η_{T̂+1} ≤ ε̂_n² ≤ 1/η_{T̂}, and η_{T̂+1} ≤ 2η_{T̂} at constant step.
        for (n, sigma, alpha) in [(25usize, 1.0, 0.25), (60, 0.4, 0.1), (100, 2.0, 0.5)] {
            let ek = sobolev(n);
            let ec = EmpiricalComplexity::new(&ek);
            let schedule = StepSchedule::constant(alpha).unwrap();
            let rec = stop_data_dependent(&schedule, &ec, sigma, 1_000_000).unwrap();
            assert!(rec.triggered && rec.t >= 1);
            let radius = critical_empirical_radius(&ec, sigma).unwrap();
            let eps_sq = radius.value * radius.value;
            let eta_t = schedule.eta(rec.t);
            let eta_next = schedule.eta(rec.t + 1);
            assert!(
                1.0 / eta_next <= eps_sq + 1e-12 && eps_sq <= 1.0 / eta_t + 1e-12,
                "n={n} T={} eps²={eps_sq} window=[{}, {}]",
                rec.t,
                1.0 / eta_next,
                1.0 / eta_t
            );
            assert!(eta_next <= 2.0 * eta_t);
        }
    }

    #[test]
    fn sure_risk_endpoints() {
        let n = 12;
        let ek = sobolev(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let y: Vec<f64> = (0..n).map(|i| libm::sin(1.7 * i as f64)).collect();
        let sigma = 0.8;

        // t = 0: S̃ = I so R_SU = ‖Y‖²/n − σ².
        let r0 = sure_risk(&schedule, &ek, &y, sigma, 0).unwrap();
        let norm_sq: f64 = y.iter().map(|&v| v * v).sum::<f64>() / n as f64;
        assert!((r0 - (norm_sq - sigma * sigma)).abs() < 1e-12);

        // t → ∞ on a full-rank kernel: S̃ → 0 and R_SU → σ².
        assert_eq!(ek.rank(), n);
        let r_inf = sure_risk(&schedule, &ek, &y, sigma, 200_000).unwrap();
        assert!((r_inf - sigma * sigma).abs() < 1e-8, "r_inf={r_inf}");
    }

    #[test]
    fn sure_risk_matches_dense_product_oracle() {
        // Build S̃^t by repeated dense multiplication with (I − αK).
        let n = 9;
        let ek = sobolev(n);
        let alpha = 0.3;
        let schedule = StepSchedule::constant(alpha).unwrap();
        let y: Vec<f64> = (0..n).map(|i| libm::cos(2.3 * i as f64 + 0.4)).collect();
        let sigma = 1.1;
        let t = 17;

        let k = ek.matrix();
        let mut s = alloc::vec![0.0; n * n];
        for i in 0..n {
            s[i * n + i] = 1.0;
        }
        for _ in 0..t {
            let mut next = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = s[i * n + j];
                    for l in 0..n {
                        acc -= alpha * k[i * n + l] * s[l * n + j];
                    }
                    next[i * n + j] = acc;
                }
            }
            s = next;
        }
        let mut sy = alloc::vec![0.0; n];
        matvec(&s, n, &y, &mut sy);
        let quad: f64 = sy.iter().map(|&v| v * v).sum();
        let trace: f64 = (0..n).map(|i| s[i * n + i]).sum();
        let expect =
            (n as f64 * sigma * sigma + quad - 2.0 * sigma * sigma * trace) / n as f64;

        let got = sure_risk(&schedule, &ek, &y, sigma, t).unwrap();
        assert!((got - expect).abs() < 1e-8, "got {got} expect {expect}");
    }

    #[test]
    fn sure_immediate_increase_clamps_to_zero() {
        // y = 0 makes R_SU = σ²(1 − 2 trace(S̃)/n), increasing from t = 0.
        let ek = sobolev(8);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let y = alloc::vec![0.0; 8];
        let rec = stop_sure(&schedule, &ek, &y, 1.0, 100).unwrap();
        assert!(rec.triggered && rec.clamped);
        assert_eq!(rec.t, 0);
    }

    #[test]
    fn oracle_flat_trace_never_triggers() {
        let ek = sobolev(6);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let zeros = alloc::vec![0.0; 6];
        let rec = stop_oracle(&schedule, &ek, &zeros, &zeros, 50).unwrap();
        assert!(!rec.triggered);
        assert_eq!(rec.t, 50);
        assert!(rec.risk_trace.iter().all(|&r| r == 0.0));
    }

    fn scan_trace(trace: &[f64], cap: usize) -> (usize, bool) {
        for i in 0..trace.len().saturating_sub(1) {
            if trace[i + 1] > trace[i] {
                return (i.saturating_sub(1), true);
            }
        }
        (cap, false)
    }

    #[test]
    fn oracle_and_sure_match_trace_scan() {
        let n = 50;
        let ek = sobolev(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let fstar: Vec<f64> = ek.design().iter().map(|&x| libm::fabs(x - 0.5) - 0.5).collect();
        let y: Vec<f64> = fstar
            .iter()
            .enumerate()
            .map(|(i, &f)| f + 0.9 * libm::sin(13.7 * i as f64 + 0.2))
            .collect();

        let rec = stop_oracle(&schedule, &ek, &y, &fstar, 500).unwrap();
        let (t, triggered) = scan_trace(&rec.risk_trace, 500);
        assert_eq!((rec.t, rec.triggered), (t, triggered));

        let rec_su = stop_sure(&schedule, &ek, &y, 1.0, 500).unwrap();
        let (t_su, trig_su) = scan_trace(&rec_su.risk_trace, 500);
        assert_eq!((rec_su.t, rec_su.triggered), (t_su, trig_su));
    }

    #[test]
    fn holdout_matches_trace_scan() {
        let n = 100;
        let kernel = Kernel::first_order_sobolev();
        let config = crate::experiments::ExperimentConfig {
            n,
            design: crate::experiments::DesignSpec::Fixed,
            fstar: crate::experiments::TargetFunction::AbsShift,
            sigma_true: 1.0,
            kernel: kernel.clone(),
            schedule: StepSchedule::constant(0.25).unwrap(),
            trials: 1,
            seed: 99,
            sigma_source: crate::experiments::SigmaSource::Known,
            cap: 500,
            quadrature: crate::descent::QuadratureGrid::default(),
        };
        let data = crate::experiments::generate_data(&config, 0).unwrap();
        let design = data.design;
        let y = data.y;
        // Interleave the halves by parity so both cover [0, 1].
        let (mut tr_x, mut tr_y, mut te_x, mut te_y) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            if i % 2 == 0 {
                tr_x.push(design[i]);
                tr_y.push(y[i]);
            } else {
                te_x.push(design[i]);
                te_y.push(y[i]);
            }
        }
        let schedule = StepSchedule::constant(0.25).unwrap();
        let rec =
            stop_holdout(&tr_x, &tr_y, &te_x, &te_y, &kernel, &schedule, 500).unwrap();
        assert!(rec.triggered);
        let (t, triggered) = scan_trace(&rec.risk_trace, 500);
        assert_eq!((rec.t, rec.triggered), (t, triggered));
    }

    #[test]
    fn holdout_noiseless_hits_short_cap() {
        // f* in the span of the kernel and w = 0: test risk keeps falling.
        let kernel = Kernel::first_order_sobolev();
        let n = 40;
        let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        // min-kernel functions are piecewise linear through the origin; x/2 is one.
        let y: Vec<f64> = design.iter().map(|&x| 0.5 * x).collect();
        let (tr_x, tr_y): (Vec<f64>, Vec<f64>) = design
            .iter()
            .zip(&y)
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(_, (&x, &v))| (x, v))
            .unzip();
        let (te_x, te_y): (Vec<f64>, Vec<f64>) = design
            .iter()
            .zip(&y)
            .enumerate()
            .filter(|(i, _)| i % 2 == 1)
            .map(|(_, (&x, &v))| (x, v))
            .unzip();
        let schedule = StepSchedule::constant(0.25).unwrap();
        let rec = stop_holdout(&tr_x, &tr_y, &te_x, &te_y, &kernel, &schedule, 10).unwrap();
        assert!(!rec.triggered);
        assert_eq!(rec.t, 10);
    }
}
