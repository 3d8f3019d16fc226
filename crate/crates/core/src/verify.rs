//! Reusable property suites packaging the computable inequalities: shrinkage
//! bounds, the bias–variance decomposition, recursion equivalence, the
//! critical-radius fixed point, and the stopping-time sandwich.
//!
//! Violations are reported, never thrown; each report is deterministic in
//! its seed.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity::{critical_empirical_radius, EmpiricalComplexity, EMPIRICAL_PREFACTOR};
use crate::descent::{
    bias_variance_split, descend_step, shrinkage_from_eigenvalues, DescentState,
    SpectralSequence, StepSchedule,
};
use crate::kernels::{build_empirical_kernel, Kernel};
use crate::stopping::stop_data_dependent;

// Floating-point slack on the exact lemma inequalities.
const SLACK: f64 = 1e-12;

/// Outcome of one property suite.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub name: &'static str,
    pub instances: usize,
    pub violations: usize,
    /// Largest observed excess of the violated side over its bound
    /// (0 when everything holds).
    pub worst_margin: f64,
    pub pass: bool,
}

struct ReportBuilder {
    name: &'static str,
    instances: usize,
    violations: usize,
    worst_margin: f64,
}

impl ReportBuilder {
    fn new(name: &'static str) -> Self {
        ReportBuilder {
            name,
            instances: 0,
            violations: 0,
            worst_margin: 0.0,
        }
    }

    fn observe(&mut self, margin: f64) {
        if margin > 0.0 {
            self.violations += 1;
            if margin > self.worst_margin {
                self.worst_margin = margin;
            }
        }
    }

    fn instance(&mut self) {
        self.instances += 1;
    }

    fn finish(self) -> PropertyReport {
        PropertyReport {
            name: self.name,
            instances: self.instances,
            violations: self.violations,
            worst_margin: self.worst_margin,
            pass: self.violations == 0,
        }
    }
}

fn rng_for(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&suite.to_le_bytes());
    key[24..32].copy_from_slice(b"propsuit");
    ChaCha8Rng::from_seed(key)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Gradient and ridge shrinkage bounds on random `(λ̂, schedule, t)` and
/// `(λ̂, ν)` instances:
/// `S² ≤ 1/(2e η λ̂)`, `½min{1, ηλ̂} ≤ 1 − S ≤ min{1, ηλ̂}`, and their ridge
/// analogs `R² ≤ 1/(4νλ̂)`, `½min{1, νλ̂} ≤ 1 − R ≤ min{1, νλ̂}`.
pub fn check_shrinkage_bounds(samples: usize, seed: u64) -> PropertyReport {
    let mut rng = rng_for(seed, 1);
    let mut report = ReportBuilder::new("shrinkage_bounds");
    for _ in 0..samples {
        report.instance();
        // Eigenvalues in (0, 1] keep every α ∈ (0, 1] valid.
        let lambda = uniform_in(&mut rng, 1e-6, 1.0);
        let alpha = uniform_in(&mut rng, 1e-3, 1.0);
        let t = 1 + (rng.next_u64() % 100) as usize;
        let schedule = StepSchedule::Constant(alpha);
        let s = shrinkage_from_eigenvalues(&schedule, &[lambda], t).diag[0];
        let eta = schedule.eta(t);
        let prod = if eta * lambda < 1.0 { eta * lambda } else { 1.0 };
        report.observe(s * s - 1.0 / (2.0 * core::f64::consts::E * eta * lambda) - SLACK);
        report.observe(0.5 * prod - (1.0 - s) - SLACK);
        report.observe((1.0 - s) - prod - SLACK);

        let nu = uniform_in(&mut rng, 1e-3, 200.0);
        let r = 1.0 / (1.0 + nu * lambda);
        let rprod = if nu * lambda < 1.0 { nu * lambda } else { 1.0 };
        report.observe(r * r - 1.0 / (4.0 * nu * lambda) - SLACK);
        report.observe(0.5 * rprod - (1.0 - r) - SLACK);
        report.observe((1.0 - r) - rprod - SLACK);
    }
    report.finish()
}

fn random_sorted_design(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|_| uniform_in(rng, 0.01, 1.0)).collect();
    d.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Per-realization upper bound `‖f^t − f*‖_n² ≤ B_t² + V_t` on random
/// instances, plus the expectation lower bound `E‖f^t − f*‖_n² ≥ E[V_t]/2`
/// over 500 noise draws with 10% slack. (The factor 2 baked into `V_t` is
/// an upper-bound artifact; the expected error equals `E[V_t]/2` plus the
/// exact squared bias, so halving is the sharp lower bound.)
pub fn check_decomposition(samples: usize, seed: u64) -> PropertyReport {
    let mut rng = rng_for(seed, 2);
    let mut report = ReportBuilder::new("decomposition");
    let kernel = Kernel::first_order_sobolev();
    for _ in 0..samples {
        report.instance();
        let n = 5 + (rng.next_u64() % 11) as usize;
        let design = random_sorted_design(&mut rng, n);
        let ek = match build_empirical_kernel(&kernel, &design) {
            Ok(ek) => ek,
            Err(_) => continue,
        };
        let alpha = uniform_in(&mut rng, 0.05, 1.0f64.min(1.0 / ek.lambda1()));
        let schedule = StepSchedule::Constant(alpha);
        let fstar: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
        let noise: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
        let y: Vec<f64> = fstar.iter().zip(&noise).map(|(&f, &w)| f + w).collect();
        let t = (rng.next_u64() % 61) as usize;

        let mut state = DescentState::initial(n);
        for tau in 0..t {
            state = descend_step(&state, &ek, &y, schedule.step(tau)).unwrap();
        }
        let err = crate::descent::empirical_norm_error(&state.fvals, &fstar).unwrap();
        let split = bias_variance_split(&schedule, &ek, t, &fstar, &noise).unwrap();
        report.observe(err - (split.squared_bias + split.variance) - SLACK);
    }

    // Expectation lower bound on one fixed instance.
    report.instance();
    let n = 12;
    let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let ek = build_empirical_kernel(&kernel, &design).unwrap();
    let schedule = StepSchedule::Constant(0.25);
    let fstar: Vec<f64> = design.iter().map(|&x| libm::fabs(x - 0.5) - 0.5).collect();
    let utf = ek.to_eigenbasis(&fstar);
    let t = 15;
    let mut mean_err = 0.0;
    let mut mean_var = 0.0;
    let draws = 500;
    for _ in 0..draws {
        // Box–Muller pair per index keeps the noise Gaussian.
        let noise: Vec<f64> = (0..n)
            .map(|_| {
                let u1 = uniform(&mut rng).max(1e-300);
                let u2 = uniform(&mut rng);
                libm::sqrt(-2.0 * libm::log(u1))
                    * libm::cos(2.0 * core::f64::consts::PI * u2)
            })
            .collect();
        let y: Vec<f64> = fstar.iter().zip(&noise).map(|(&f, &w)| f + w).collect();
        let mut seq = SpectralSequence::new(&ek, &schedule, &y).unwrap();
        for _ in 0..t {
            seq.advance();
        }
        mean_err += seq.empirical_error_sq(&utf);
        mean_var += bias_variance_split(&schedule, &ek, t, &fstar, &noise)
            .unwrap()
            .variance;
    }
    mean_err /= draws as f64;
    mean_var /= draws as f64;
    report.observe(0.9 * 0.5 * mean_var - mean_err);

    report.finish()
}

/// Three-way agreement of the ω-path, the direct value recursion, and the
/// spectral form over 200 steps, within 1e−8 at every step.
pub fn check_recursion_equivalence(samples: usize, seed: u64) -> PropertyReport {
    let mut rng = rng_for(seed, 3);
    let mut report = ReportBuilder::new("recursion_equivalence");
    const TOL: f64 = 1e-8;
    for k in 0..samples {
        report.instance();
        let n = 4 + (rng.next_u64() % 9) as usize;
        let design = random_sorted_design(&mut rng, n);
        let kernel = if k % 2 == 0 {
            Kernel::first_order_sobolev()
        } else {
            Kernel::gaussian(uniform_in(&mut rng, 0.2, 1.5)).unwrap()
        };
        let ek = match build_empirical_kernel(&kernel, &design) {
            Ok(ek) => ek,
            Err(_) => continue,
        };
        let alpha = uniform_in(&mut rng, 0.05, 1.0f64.min(1.0 / ek.lambda1()));
        let schedule = StepSchedule::Constant(alpha);
        let y: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -2.0, 2.0)).collect();

        let mut state = DescentState::initial(n);
        let mut seq = SpectralSequence::new(&ek, &schedule, &y).unwrap();
        let sqrt_n = libm::sqrt(n as f64);
        let mut worst = 0.0f64;
        for t in 0..200 {
            state = descend_step(&state, &ek, &y, schedule.step(t)).unwrap();
            seq.advance();
            let via_omega = ek.apply(&state.omega);
            let via_spectral = seq.fvals();
            for i in 0..n {
                worst = worst.max(libm::fabs(state.fvals[i] - sqrt_n * via_omega[i]));
                worst = worst.max(libm::fabs(state.fvals[i] - via_spectral[i]));
            }
        }
        report.observe(worst - TOL);
    }
    report.finish()
}

/// Critical-radius fixed point: residual of `R̂(ε̂) = ε̂²/(2eσ)` within
/// 1e−10, and the root lies inside one 1e−5 grid cell of the sign change.
pub fn check_critical_radius(samples: usize, seed: u64) -> PropertyReport {
    let mut rng = rng_for(seed, 4);
    let mut report = ReportBuilder::new("critical_radius");
    const GRID: f64 = 1e-5;
    for _ in 0..samples {
        report.instance();
        let r = 1 + (rng.next_u64() % 8) as usize;
        let mut eigs: Vec<f64> = (0..r).map(|_| uniform_in(&mut rng, 1e-4, 1.0)).collect();
        eigs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let n = r + (rng.next_u64() % 40) as usize;
        let sigma = uniform_in(&mut rng, 0.1, 3.0);
        let ec = EmpiricalComplexity::from_parts(&eigs, n);
        let radius = critical_empirical_radius(&ec, sigma).unwrap();
        report.observe(radius.residual - crate::tol::TOL_ROOT);

        // Grid-scan agreement: the criterion changes sign across the cell.
        let g = |eps: f64| eps * eps / (EMPIRICAL_PREFACTOR * sigma) - ec.value(eps);
        report.observe(g(radius.value - GRID));
        report.observe(-g(radius.value + GRID));
    }
    report.finish()
}

/// Stopping-time sandwich `1/η_{T̂+1} ≤ ε̂_n² ≤ 1/η_{T̂}` on random
/// eigenvalue instances with constant steps.
pub fn check_stopping_sandwich(samples: usize, seed: u64) -> PropertyReport {
    let mut rng = rng_for(seed, 5);
    let mut report = ReportBuilder::new("stopping_sandwich");
    for _ in 0..samples {
        report.instance();
        let r = 1 + (rng.next_u64() % 8) as usize;
        let mut eigs: Vec<f64> = (0..r).map(|_| uniform_in(&mut rng, 1e-3, 1.0)).collect();
        eigs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let n = r + (rng.next_u64() % 40) as usize;
        let sigma = uniform_in(&mut rng, 0.1, 3.0);
        let alpha = uniform_in(&mut rng, 0.01, 1.0);
        let schedule = StepSchedule::Constant(alpha);
        let ec = EmpiricalComplexity::from_parts(&eigs, n);

        let rec = match stop_data_dependent(&schedule, &ec, sigma, 10_000_000) {
            Ok(rec) => rec,
            Err(_) => {
                report.observe(1.0);
                continue;
            }
        };
        if !rec.triggered {
            report.observe(1.0);
            continue;
        }
        let eps_sq = {
            let radius = critical_empirical_radius(&ec, sigma).unwrap();
            radius.value * radius.value
        };
        let slack = 1e-9 * (1.0 + eps_sq);
        if rec.t >= 1 {
            report.observe(eps_sq - 1.0 / schedule.eta(rec.t) - slack);
        }
        report.observe(1.0 / schedule.eta(rec.t + 1) - eps_sq - slack);
    }
    report.finish()
}
