//! Numerical tolerances shared across the crate.
//!
//! All are comfortably above double-precision noise for matrices up to
//! `n = 2000`, the largest size the desk-scale experiments touch.

/// A Gram matrix eigenvalue below `-TOL_PSD * lambda1` is a PSD violation.
pub const TOL_PSD: f64 = 1e-10;

/// Eigenvalues below `TOL_RANK * lambda1` are clamped to zero and do not
/// count towards the numerical rank.
pub const TOL_RANK: f64 = 1e-12;

/// Max-entry tolerance for eigendecomposition reconstruction and the trace
/// identity.
pub const TOL_RECON: f64 = 1e-8;

/// Tolerance on orthonormality of the eigenvector columns.
pub const TOL_ORTHO: f64 = 1e-10;

/// Residual tolerance for the bisection fixed-point solvers.
pub const TOL_ROOT: f64 = 1e-10;

/// Residual tolerance for the kernel ridge stationarity relation.
pub const TOL_SOLVE: f64 = 1e-8;

/// Relative tolerance on the truncated tail of population eigenvalue sums.
pub const TAIL_TOL: f64 = 1e-12;
