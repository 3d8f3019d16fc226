//! Bisection on monotone criteria with automatic bracket growth.

use crate::tol::TOL_ROOT;

pub struct Root {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds the sign change of `g` on `(lo, inf)`, where `g < 0` near `lo` and
/// `g > 0` for large arguments. The upper bracket starts at `hi0` and doubles
/// until `g` turns positive. Bisection is unconditionally convergent here
/// because the callers' criteria cross zero exactly once.
pub fn bisect_monotone<F: Fn(f64) -> f64>(g: F, lo0: f64, hi0: f64) -> Root {
    const MAX_ITER: usize = 200;
    const MAX_DOUBLINGS: usize = 200;

    let mut lo = lo0;
    let mut hi = hi0;
    let mut doublings = 0;
    while g(hi) <= 0.0 && doublings < MAX_DOUBLINGS {
        hi *= 2.0;
        doublings += 1;
    }

    // Bisect down to machine width so the residual lands well inside
    // TOL_ROOT even when the criterion has slope of order one.
    let mut iterations = 0;
    while iterations < MAX_ITER && (hi - lo) > f64::EPSILON * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if libm::fabs(g(0.5 * (lo + hi))) <= 0.01 * TOL_ROOT {
            break;
        }
    }
    let value = 0.5 * (lo + hi);
    Root {
        value,
        residual: libm::fabs(g(value)),
        iterations,
    }
}
