use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid construction parameters (negative bandwidth, divergent decay
    /// model, bad grids, and so on).
    Config(String),
    /// The cyclic Jacobi eigensolver did not converge within the sweep cap.
    EigenNonConvergence { sweeps: usize },
    /// A Gram matrix had an eigenvalue below `-tol_psd * lambda1`.
    PsdViolation {
        kernel: String,
        min_eigenvalue: f64,
        lambda1: f64,
    },
    /// All empirical eigenvalues are zero; the critical radius and the
    /// stopping criterion have no positive solution.
    DegenerateKernel,
    /// A step size fell outside `[0, min{1, 1/lambda1}]`.
    InvalidStep { alpha: f64, max_allowed: f64 },
    /// Two vectors that must have equal length did not.
    LengthMismatch { left: usize, right: usize },
    /// Failure inside a Monte Carlo trial, tagged with the trial id.
    Trial { trial_id: u64, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::EigenNonConvergence { sweeps } => {
                write!(f, "Jacobi eigensolver did not converge after {sweeps} sweeps")
            }
            Error::PsdViolation {
                kernel,
                min_eigenvalue,
                lambda1,
            } => write!(
                f,
                "kernel {kernel} produced a non-PSD Gram matrix \
                 (min eigenvalue {min_eigenvalue:e}, lambda1 {lambda1:e})"
            ),
            Error::DegenerateKernel => {
                write!(f, "degenerate kernel: all empirical eigenvalues are zero")
            }
            Error::InvalidStep { alpha, max_allowed } => {
                write!(f, "step size {alpha} outside [0, {max_allowed}]")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::Trial { trial_id, source } => {
                write!(f, "trial {trial_id}: {source}")
            }
        }
    }
}

impl core::error::Error for Error {}
