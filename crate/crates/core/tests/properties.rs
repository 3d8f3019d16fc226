//! Randomized invariants that cut across modules.

use proptest::prelude::*;

use earlystop_core::complexity::{critical_empirical_radius, EmpiricalComplexity};
use earlystop_core::descent::{shrinkage_from_eigenvalues, StepSchedule};
use earlystop_core::kernels::{build_empirical_kernel, Kernel};

const E: f64 = core::f64::consts::E;

fn sorted_design(raw: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = raw.iter().map(|&x| 0.01 + 0.99 * x).collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // All three shrinkage inequalities for non-increasing custom schedules.
    #[test]
    fn shrinkage_bounds_hold_for_custom_schedules(
        raw_steps in proptest::collection::vec(0.01f64..1.0, 1..8),
        lambda in 1e-6f64..1.0,
        t in 1usize..100,
    ) {
        let mut steps = raw_steps;
        steps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let schedule = StepSchedule::custom(steps).unwrap();
        let s = shrinkage_from_eigenvalues(&schedule, &[lambda], t).diag[0];
        let eta = schedule.eta(t);
        let prod = (eta * lambda).min(1.0);
        prop_assert!(s * s <= 1.0 / (2.0 * E * eta * lambda) + 1e-12);
        prop_assert!(0.5 * prod <= 1.0 - s + 1e-12);
        prop_assert!(1.0 - s <= prod + 1e-12);
    }

    // η ↦ η·R̂(1/√η) never decreases (stopping-time uniqueness).
    #[test]
    fn eta_scaled_complexity_is_nondecreasing(
        eigs in proptest::collection::vec(1e-5f64..1.0, 1..10),
        eta_a in 1e-3f64..1e4,
        factor in 1.0f64..100.0,
        extra in 0usize..50,
    ) {
        let mut eigs = eigs;
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let ec = EmpiricalComplexity::from_parts(&eigs, eigs.len() + extra);
        let lo = ec.eta_scaled(eta_a);
        let hi = ec.eta_scaled(eta_a * factor);
        prop_assert!(hi >= lo - 1e-12 * (1.0 + lo.abs()));
    }

    // Eigendecomposition invariants on random designs and kernels.
    #[test]
    fn eigendecomposition_invariants(
        raw in proptest::collection::vec(0.0f64..1.0, 4..12),
        pick in 0u8..3,
        bandwidth in 0.2f64..1.5,
    ) {
        let design = sorted_design(&raw);
        prop_assume!(design.len() >= 4);
        let n = design.len();
        let kernel = match pick {
            0 => Kernel::first_order_sobolev(),
            1 => Kernel::gaussian(bandwidth).unwrap(),
            _ => Kernel::polynomial(2).unwrap(),
        };
        let ek = build_empirical_kernel(&kernel, &design).unwrap();
        let (vals, vecs) = (ek.eigenvalues(), ek.eigenvectors());

        // Ordering and clamping.
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(vals.iter().all(|&l| l >= 0.0));
        prop_assert_eq!(vals.iter().filter(|&&l| l > 0.0).count(), ek.rank());

        // Orthonormality: UᵀU = I within 1e-10.
        for a in 0..n {
            for b in 0..n {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += vecs[i * n + a] * vecs[i * n + b];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - target).abs() < 1e-10);
            }
        }

        // Reconstruction U Λ̂ Uᵀ = K within 1e-8 (zero-clamp included).
        let m = ek.matrix();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += vecs[i * n + k] * vals[k] * vecs[j * n + k];
                }
                prop_assert!((acc - m[i * n + j]).abs() < 1e-8);
            }
        }
    }

    // ‖(1/√n)Σ ω_i 𝕂(·, x_i)‖_H² = ωᵀKω, recovered from design values alone.
    #[test]
    fn hilbert_norm_matches_coefficient_form(
        raw in proptest::collection::vec(0.0f64..1.0, 5..10),
        coeffs in proptest::collection::vec(-2.0f64..2.0, 10),
    ) {
        let design = sorted_design(&raw);
        prop_assume!(design.len() >= 5);
        let n = design.len();
        let kernel = Kernel::first_order_sobolev();
        let ek = build_empirical_kernel(&kernel, &design).unwrap();
        prop_assume!(ek.rank() == n);
        let omega = &coeffs[..n];
        let k_omega = ek.apply(omega);
        let sqrt_n = (n as f64).sqrt();
        let fvals: Vec<f64> = k_omega.iter().map(|&v| v * sqrt_n).collect();
        let direct: f64 = omega.iter().zip(&k_omega).map(|(&w, &kw)| w * kw).sum();
        let via_pinv = ek.hilbert_norm_sq(&fvals);
        prop_assert!((via_pinv - direct).abs() < 1e-8 * (1.0 + direct.abs()));
    }

    // Custom schedules repeat their last entry; η matches a literal sum.
    #[test]
    fn custom_schedule_eta_matches_literal_sum(
        raw_steps in proptest::collection::vec(0.01f64..1.0, 1..6),
        t in 0usize..40,
    ) {
        let mut steps = raw_steps;
        steps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let schedule = StepSchedule::custom(steps.clone()).unwrap();
        let literal: f64 = (0..t)
            .map(|tau| steps[tau.min(steps.len() - 1)])
            .sum();
        prop_assert!((schedule.eta(t) - literal).abs() < 1e-12 * (1.0 + literal));
    }

    // The critical radius is a genuine fixed point: R̂(ε̂) = ε̂²/(2eσ).
    #[test]
    fn critical_radius_fixed_point(
        eigs in proptest::collection::vec(1e-4f64..1.0, 1..8),
        extra in 0usize..40,
        sigma in 0.1f64..3.0,
    ) {
        let mut eigs = eigs;
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let ec = EmpiricalComplexity::from_parts(&eigs, eigs.len() + extra);
        let radius = critical_empirical_radius(&ec, sigma).unwrap();
        let eps = radius.value;
        let lhs = ec.value(eps);
        let rhs = eps * eps / (2.0 * E * sigma);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "lhs={lhs} rhs={rhs}");
    }
}
