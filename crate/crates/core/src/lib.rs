//! Early-stopped gradient descent for non-parametric least-squares regression
//! in reproducing kernel Hilbert spaces.
//!
//! The crate is organized around the quantities that drive the data-dependent
//! stopping rule:
//!
//! * [`kernels`] — kernel families, the empirical kernel matrix `K` with
//!   entries `𝕂(x_i, x_j)/n`, and its symmetric eigendecomposition.
//! * [`complexity`] — local empirical and population Rademacher complexities
//!   and the critical-radius fixed points.
//! * [`descent`] — the gradient recursion on the representer weights, step
//!   schedules, shrinkage diagnostics, and error norms.
//! * [`stopping`] — the data-dependent stopping rule together with hold-out,
//!   SURE, and oracle competitors.
//! * [`ridge`] — the kernel ridge regression path and the matched choice of
//!   the inverse regularization parameter.
//! * [`experiments`] — seeded data generation, noise-variance estimation, and
//!   Monte Carlo trial execution.
//! * [`verify`] — reusable property-check suites for the computable
//!   inequalities relating all of the above.
//!
//! The crate is `no_std` (with `alloc`); IO, the CLI, and file formats live in
//! the companion `earlystop-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod complexity;
pub mod descent;
mod error;
pub mod experiments;
pub mod kernels;
pub(crate) mod linalg;
pub mod ridge;
pub(crate) mod solve;
pub mod stopping;
pub mod tol;
pub mod verify;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
