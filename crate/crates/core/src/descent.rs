//! The gradient-descent recursion on representer weights, step schedules,
//! shrinkage diagnostics, and the two error norms.
//!
//! The primary state is the weight iteration
//! `ω^{t+1} = ω^t − α_t (K ω^t − y/√n)`, which never forms a matrix square
//! root or pseudoinverse and whose induced values `√n K ω^t` obey the value
//! recursion below. Design-point values follow the equivalent direct
//! recursion `f^{t+1} = (I − α K) f^t + α K y`, and the spectral form
//! `Uᵀf^t = (I − S^t) Uᵀy` is available through [`SpectralSequence`] for
//! cheap whole-trace computations.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernels::{EmpiricalKernel, Kernel};
use crate::{Error, Result};

// Slack for step-validity comparisons against 1/λ̂₁.
const STEP_SLACK: f64 = 1e-12;

/// A valid step-size sequence: bounded by `min{1, 1/λ̂₁}`, non-increasing,
/// with divergent running sum `η_t = Σ_{τ<t} α_τ`.
#[derive(Clone, Debug)]
pub enum StepSchedule {
    Constant(f64),
    /// Explicit head of the sequence; the final entry repeats forever. The
    /// caller declares infinite travel by keeping that entry positive.
    Custom(Vec<f64>),
}

impl StepSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "constant step must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(StepSchedule::Constant(alpha))
    }

    pub fn custom(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Config(alloc::string::String::from(
                "custom schedule needs at least one step",
            )));
        }
        if steps.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::Config(alloc::string::String::from(
                "custom steps must lie in [0, 1]",
            )));
        }
        if steps.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config(alloc::string::String::from(
                "custom steps must be non-increasing",
            )));
        }
        Ok(StepSchedule::Custom(steps))
    }

    /// `α_t`.
    pub fn step(&self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant(a) => *a,
            StepSchedule::Custom(steps) => steps[t.min(steps.len() - 1)],
        }
    }

    /// `η_t = Σ_{τ=0}^{t-1} α_τ`; `η_0 = 0`.
    pub fn eta(&self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant(a) => a * t as f64,
            StepSchedule::Custom(steps) => {
                let head = t.min(steps.len());
                let mut acc: f64 = steps[..head].iter().sum();
                if t > steps.len() {
                    acc += steps[steps.len() - 1] * (t - steps.len()) as f64;
                }
                acc
            }
        }
    }

    /// Checks the boundedness condition `α_0 ≤ min{1, 1/λ̂₁}` against a
    /// concrete kernel (α_0 is the largest step of a valid sequence).
    pub fn validate_for(&self, lambda1: f64) -> Result<()> {
        let max_allowed = if lambda1 > 1.0 {
            1.0 / lambda1
        } else {
            1.0
        };
        let first = self.step(0);
        if first > max_allowed + STEP_SLACK {
            return Err(Error::InvalidStep {
                alpha: first,
                max_allowed,
            });
        }
        Ok(())
    }
}

/// Iteration state: `fvals_i = f^t(x_i)` with the invariant
/// `fvals = √n · K ω`.
#[derive(Clone, Debug)]
pub struct DescentState {
    pub t: usize,
    pub fvals: Vec<f64>,
    pub omega: Vec<f64>,
    pub eta: f64,
}

impl DescentState {
    /// The zero initialization `f⁰ = 0`, `ω⁰ = 0`, `η₀ = 0`.
    pub fn initial(n: usize) -> Self {
        DescentState {
            t: 0,
            fvals: vec![0.0; n],
            omega: vec![0.0; n],
            eta: 0.0,
        }
    }
}

/// One gradient step. Both representations advance by their own recursion;
/// their agreement is a checked property, not an assumption.
pub fn descend_step(
    state: &DescentState,
    kernel: &EmpiricalKernel,
    y: &[f64],
    alpha: f64,
) -> Result<DescentState> {
    let n = kernel.n();
    if y.len() != n || state.fvals.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    let max_allowed = if kernel.lambda1() > 1.0 {
        1.0 / kernel.lambda1()
    } else {
        1.0
    };
    if !(0.0..=max_allowed + STEP_SLACK).contains(&alpha) {
        return Err(Error::InvalidStep {
            alpha,
            max_allowed,
        });
    }

    let sqrt_n = libm::sqrt(n as f64);

    // ω ← ω − α (K ω − y/√n)
    let k_omega = kernel.apply(&state.omega);
    let omega: Vec<f64> = (0..n)
        .map(|i| state.omega[i] - alpha * (k_omega[i] - y[i] / sqrt_n))
        .collect();

    // f ← f − α K (f − y)
    let resid_f: Vec<f64> = state.fvals.iter().zip(y).map(|(&f, &yi)| f - yi).collect();
    let k_resid_f = kernel.apply(&resid_f);
    let fvals: Vec<f64> = state
        .fvals
        .iter()
        .zip(&k_resid_f)
        .map(|(&f, &kr)| f - alpha * kr)
        .collect();

    Ok(DescentState {
        t: state.t + 1,
        fvals,
        omega,
        eta: state.eta + alpha,
    })
}

/// Diagonal of the shrinkage matrix `S^t = Π_{τ<t} (I − α_τ Λ̂)` over the
/// nonzero eigenvalues.
#[derive(Clone, Debug)]
pub struct ShrinkageDiagnostics {
    pub t: usize,
    pub diag: Vec<f64>,
}

/// Shrinkage diagonal for the leading `r` eigenvalues of `kernel`.
pub fn shrinkage_diagonal(
    schedule: &StepSchedule,
    kernel: &EmpiricalKernel,
    t: usize,
) -> ShrinkageDiagnostics {
    shrinkage_from_eigenvalues(schedule, &kernel.eigenvalues()[..kernel.rank()], t)
}

/// Same, from a raw eigenvalue list (used by the property suites).
pub fn shrinkage_from_eigenvalues(
    schedule: &StepSchedule,
    eigenvalues: &[f64],
    t: usize,
) -> ShrinkageDiagnostics {
    let mut diag = vec![1.0; eigenvalues.len()];
    for tau in 0..t {
        let alpha = schedule.step(tau);
        for (d, &l) in diag.iter_mut().zip(eigenvalues) {
            *d *= 1.0 - alpha * l;
        }
    }
    ShrinkageDiagnostics { t, diag }
}

/// `‖f − g‖_n² = (1/n) Σ_i (f_i − g_i)²`.
pub fn empirical_norm_error(fvals: &[f64], fstar_vals: &[f64]) -> Result<f64> {
    if fvals.len() != fstar_vals.len() {
        return Err(Error::LengthMismatch {
            left: fvals.len(),
            right: fstar_vals.len(),
        });
    }
    let sum: f64 = fvals
        .iter()
        .zip(fstar_vals)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(sum / fvals.len() as f64)
}

/// Trapezoid quadrature spec on `[0, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureGrid {
    pub points: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        // Stands in for the expectation over X ~ Uniform[0,1].
        QuadratureGrid { points: 10_001 }
    }
}

/// `‖f − f*‖₂² ≈ ∫₀¹ (f(x) − f*(x))² dx` by trapezoid quadrature, where `f`
/// is evaluated off-design through the representer expansion
/// `f(x) = (1/√n) Σ_i ω_i 𝕂(x, x_i)`.
pub fn population_norm_error(
    omega: &[f64],
    design: &[f64],
    kernel: &Kernel,
    fstar: &dyn Fn(f64) -> f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if grid.points < 2 {
        return Err(Error::Config(alloc::format!(
            "quadrature grid needs at least 2 points, got {}",
            grid.points
        )));
    }
    if omega.len() != design.len() {
        return Err(Error::LengthMismatch {
            left: omega.len(),
            right: design.len(),
        });
    }
    let n = design.len();
    let sqrt_n = libm::sqrt(n as f64);
    let m = grid.points;
    let h = 1.0 / (m - 1) as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let x = k as f64 * h;
        let mut fx = 0.0;
        for i in 0..n {
            fx += omega[i] * kernel.evaluate(x, design[i]);
        }
        fx /= sqrt_n;
        let d = fx - fstar(x);
        let weight = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
        acc += weight * d * d;
    }
    Ok(acc * h)
}

/// Oracle decomposition of the prediction error at iteration `t`.
#[derive(Clone, Copy, Debug)]
pub struct BiasVarianceSplit {
    pub squared_bias: f64,
    pub variance: f64,
}

/// `B_t² = (2/n)[Σ_{j≤r} (S^t_jj)² [Uᵀf*]_j² + Σ_{j>r} [Uᵀf*]_j²]` and
/// `V_t = (2/n) Σ_{j≤r} (1 − S^t_jj)² [Uᵀw]_j²`, from the realized noise.
pub fn bias_variance_split(
    schedule: &StepSchedule,
    kernel: &EmpiricalKernel,
    t: usize,
    fstar_vals: &[f64],
    noise: &[f64],
) -> Result<BiasVarianceSplit> {
    let n = kernel.n();
    if fstar_vals.len() != n || noise.len() != n {
        return Err(Error::LengthMismatch {
            left: fstar_vals.len(),
            right: n,
        });
    }
    let r = kernel.rank();
    let shrink = shrinkage_diagonal(schedule, kernel, t);
    let utf = kernel.to_eigenbasis(fstar_vals);
    let utw = kernel.to_eigenbasis(noise);

    let mut bias = 0.0;
    for j in 0..r {
        bias += shrink.diag[j] * shrink.diag[j] * utf[j] * utf[j];
    }
    for j in r..n {
        bias += utf[j] * utf[j];
    }
    let mut var = 0.0;
    for j in 0..r {
        let g = 1.0 - shrink.diag[j];
        var += g * g * utw[j] * utw[j];
    }
    let scale = 2.0 / n as f64;
    Ok(BiasVarianceSplit {
        squared_bias: scale * bias,
        variance: scale * var,
    })
}

/// Whole-path spectral view of the descent: maintains the full diagonal of
/// `S^t` (including unit entries on the null space of `K`) so per-iteration
/// errors and risk estimates cost O(n) after one projection.
pub struct SpectralSequence<'a> {
    kernel: &'a EmpiricalKernel,
    schedule: &'a StepSchedule,
    uty: Vec<f64>,
    shrink: Vec<f64>,
    t: usize,
    eta: f64,
}

impl<'a> SpectralSequence<'a> {
    pub fn new(
        kernel: &'a EmpiricalKernel,
        schedule: &'a StepSchedule,
        y: &[f64],
    ) -> Result<Self> {
        if y.len() != kernel.n() {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: kernel.n(),
            });
        }
        schedule.validate_for(kernel.lambda1())?;
        Ok(SpectralSequence {
            kernel,
            schedule,
            uty: kernel.to_eigenbasis(y),
            shrink: vec![1.0; kernel.n()],
            t: 0,
            eta: 0.0,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Current diagonal of `S^t` over all n eigendirections (unit entries on
    /// the null space of `K`).
    pub fn shrinkage(&self) -> &[f64] {
        &self.shrink
    }

    /// Advances `S^t → S^{t+1}` by one multiplication per eigenvalue.
    pub fn advance(&mut self) {
        let alpha = self.schedule.step(self.t);
        for (s, &l) in self.shrink.iter_mut().zip(self.kernel.eigenvalues()) {
            *s *= 1.0 - alpha * l;
        }
        self.t += 1;
        self.eta += alpha;
    }

    /// `‖f^t − f*‖_n²` given `Uᵀf*` (precompute it once per realization).
    pub fn empirical_error_sq(&self, utf: &[f64]) -> f64 {
        let n = self.kernel.n() as f64;
        let mut acc = 0.0;
        for j in 0..self.uty.len() {
            let d = (1.0 - self.shrink[j]) * self.uty[j] - utf[j];
            acc += d * d;
        }
        acc / n
    }

    /// SURE risk `σ² + (1/n) Yᵀ(S̃^t)²Y − (2σ²/n) trace(S̃^t)` with
    /// `S̃^t = U S^t Uᵀ`.
    pub fn sure_risk(&self, sigma: f64) -> f64 {
        let n = self.kernel.n() as f64;
        let mut quad = 0.0;
        let mut trace = 0.0;
        for (s, &u) in self.shrink.iter().zip(&self.uty) {
            quad += s * s * u * u;
            trace += s;
        }
        sigma * sigma + quad / n - 2.0 * sigma * sigma * trace / n
    }

    /// Design-point values `f^t(x) = U (I − S^t) Uᵀ y`.
    pub fn fvals(&self) -> Vec<f64> {
        let coeffs: Vec<f64> = self
            .shrink
            .iter()
            .zip(&self.uty)
            .map(|(&s, &u)| (1.0 - s) * u)
            .collect();
        self.kernel.from_eigenbasis(&coeffs)
    }

    /// Representer weights with `fvals = √n K ω`, taken on the range of `K`.
    pub fn omega(&self) -> Vec<f64> {
        let r = self.kernel.rank();
        let eigs = self.kernel.eigenvalues();
        let sqrt_n = libm::sqrt(self.kernel.n() as f64);
        let coeffs: Vec<f64> = (0..self.kernel.n())
            .map(|j| {
                if j < r {
                    (1.0 - self.shrink[j]) * self.uty[j] / (eigs[j] * sqrt_n)
                } else {
                    0.0
                }
            })
            .collect();
        self.kernel.from_eigenbasis(&coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_empirical_kernel;

    fn sobolev_kernel(n: usize) -> EmpiricalKernel {
        let k = Kernel::first_order_sobolev();
        let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        build_empirical_kernel(&k, &design).unwrap()
    }

    #[test]
    fn first_step_from_zero_is_alpha_k_y() {
        let ek = sobolev_kernel(5);
        let y = [1.0, -1.0, 0.5, 0.0, 2.0];
        let s1 = descend_step(&DescentState::initial(5), &ek, &y, 0.25).unwrap();
        let ky = ek.apply(&y);
        for i in 0..5 {
            assert!((s1.fvals[i] - 0.25 * ky[i]).abs() < 1e-15);
        }
        assert_eq!(s1.t, 1);
        assert!((s1.eta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_step_only_advances_counters() {
        let ek = sobolev_kernel(4);
        let y = [1.0, 2.0, 3.0, 4.0];
        let mut s = descend_step(&DescentState::initial(4), &ek, &y, 0.25).unwrap();
        let before = s.fvals.clone();
        s = descend_step(&s, &ek, &y, 0.0).unwrap();
        assert_eq!(s.fvals, before);
        assert_eq!(s.t, 2);
    }

    #[test]
    fn invalid_step_is_rejected() {
        let ek = sobolev_kernel(4);
        let y = [0.0; 4];
        let err = descend_step(&DescentState::initial(4), &ek, &y, 1.5).unwrap_err();
        assert!(matches!(err, Error::InvalidStep { .. }));
    }

    #[test]
    fn three_way_recursion_agreement() {
        // ω-path, direct f-recursion, and spectral form after 50 steps.
        let n = 10;
        let ek = sobolev_kernel(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let y: Vec<f64> = (0..n).map(|i| libm::sin(3.0 * i as f64) * 0.7).collect();

        let mut state = DescentState::initial(n);
        let mut spectral = SpectralSequence::new(&ek, &schedule, &y).unwrap();
        for t in 0..50 {
            state = descend_step(&state, &ek, &y, schedule.step(t)).unwrap();
            spectral.advance();
        }

        let from_omega = {
            let k_omega = ek.apply(&state.omega);
            let sqrt_n = libm::sqrt(n as f64);
            k_omega.iter().map(|&v| v * sqrt_n).collect::<Vec<f64>>()
        };
        let from_spectral = spectral.fvals();
        for i in 0..n {
            assert!((state.fvals[i] - from_omega[i]).abs() < 1e-8);
            assert!((state.fvals[i] - from_spectral[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn shrinkage_closed_form_constant_step() {
        let ek = sobolev_kernel(6);
        let schedule = StepSchedule::constant(0.5).unwrap();
        let s0 = shrinkage_diagonal(&schedule, &ek, 0);
        assert!(s0.diag.iter().all(|&d| d == 1.0));
        let s7 = shrinkage_diagonal(&schedule, &ek, 7);
        for (j, &d) in s7.diag.iter().enumerate() {
            let expect = libm::pow(1.0 - 0.5 * ek.eigenvalues()[j], 7.0);
            assert!((d - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_norm_basics() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(empirical_norm_error(&a, &a).unwrap(), 0.0);
        let b = [0.0, 1.0, 2.0];
        assert!((empirical_norm_error(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(empirical_norm_error(&a, &[1.0]).is_err());

        // Direct re-summation oracle on arbitrary vectors.
        let u = [0.3, -1.2, 0.7, 2.2, -0.1, 0.0, 5.5];
        let v = [1.0, 0.0, -0.5, 2.0, 0.1, -3.0, 5.0];
        let mut acc = 0.0;
        for i in 0..7 {
            acc += (u[i] - v[i]) * (u[i] - v[i]);
        }
        assert!((empirical_norm_error(&u, &v).unwrap() - acc / 7.0).abs() < 1e-15);
    }

    #[test]
    fn population_norm_against_closed_form() {
        // f ≡ 0 against f*(x) = |x − 1/2| − 1/2: ∫₀¹ (|x−½|−½)² dx = 1/12.
        let k = Kernel::first_order_sobolev();
        let n = 8;
        let design: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let omega = vec![0.0; n];
        let fstar = |x: f64| libm::fabs(x - 0.5) - 0.5;
        let got = population_norm_error(
            &omega,
            &design,
            &k,
            &fstar,
            &QuadratureGrid::default(),
        )
        .unwrap();
        assert!((got - 1.0 / 12.0).abs() < 1e-6, "got {got}");

        // Grid refinement changes the value only slightly.
        let coarse =
            population_norm_error(&omega, &design, &k, &fstar, &QuadratureGrid { points: 1_001 })
                .unwrap();
        assert!((got - coarse).abs() < 1e-4);
    }

    #[test]
    fn bias_variance_split_limits() {
        let n = 8;
        let ek = sobolev_kernel(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let fstar: Vec<f64> = ek.design().iter().map(|&x| libm::fabs(x - 0.5) - 0.5).collect();
        let noise: Vec<f64> = (0..n).map(|i| libm::cos(7.0 * i as f64)).collect();

        // t = 0: S⁰ = I so V₀ = 0 and B₀² = 2‖f*‖_n².
        let s0 = bias_variance_split(&schedule, &ek, 0, &fstar, &noise).unwrap();
        assert_eq!(s0.variance, 0.0);
        let norm_sq = empirical_norm_error(&fstar, &vec![0.0; n]).unwrap();
        assert!((s0.squared_bias - 2.0 * norm_sq).abs() < 1e-12);

        // Zero noise kills the variance at every t.
        let s9 = bias_variance_split(&schedule, &ek, 9, &fstar, &vec![0.0; n]).unwrap();
        assert_eq!(s9.variance, 0.0);
    }

    #[test]
    fn decomposition_upper_bounds_realized_error() {
        let n = 12;
        let ek = sobolev_kernel(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let fstar: Vec<f64> = ek.design().iter().map(|&x| libm::fabs(x - 0.5) - 0.5).collect();
        let noise: Vec<f64> = (0..n).map(|i| 0.8 * libm::sin(11.0 * i as f64 + 0.3)).collect();
        let y: Vec<f64> = fstar.iter().zip(&noise).map(|(&f, &w)| f + w).collect();

        let mut state = DescentState::initial(n);
        for t in 0..40 {
            state = descend_step(&state, &ek, &y, schedule.step(t)).unwrap();
            let err = empirical_norm_error(&state.fvals, &fstar).unwrap();
            let split = bias_variance_split(&schedule, &ek, t + 1, &fstar, &noise).unwrap();
            assert!(
                err <= split.squared_bias + split.variance + 1e-10,
                "t={} err={} bound={}",
                t + 1,
                err,
                split.squared_bias + split.variance
            );
        }
    }

    #[test]
    fn unit_hilbert_norm_bias_bound() {
        // B_t² ≤ 1/(e η_t) when ‖f*‖_H = 1.
        let n = 15;
        let ek = sobolev_kernel(n);
        let schedule = StepSchedule::constant(0.25).unwrap();
        let raw: Vec<f64> = (0..n).map(|i| libm::sin(2.5 * i as f64)).collect();
        let mut fstar = {
            let k_raw = ek.apply(&raw);
            let sqrt_n = libm::sqrt(n as f64);
            k_raw.iter().map(|&v| v * sqrt_n).collect::<Vec<f64>>()
        };
        let norm = libm::sqrt(ek.hilbert_norm_sq(&fstar));
        for v in fstar.iter_mut() {
            *v /= norm;
        }
        assert!((ek.hilbert_norm_sq(&fstar) - 1.0).abs() < 1e-8);

        let zeros = vec![0.0; n];
        for t in 1..=100usize {
            let split = bias_variance_split(&schedule, &ek, t, &fstar, &zeros).unwrap();
            let bound = 1.0 / (core::f64::consts::E * schedule.eta(t));
            assert!(
                split.squared_bias <= bound + 1e-10,
                "t={t} bias={} bound={bound}",
                split.squared_bias
            );
        }
    }
}
