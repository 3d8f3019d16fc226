//! Kernel families, population eigendecay models, and the empirical kernel
//! matrix with its symmetric eigendecomposition.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::linalg;
use crate::tol::{TOL_PSD, TOL_RANK};
use crate::{Error, Result};

/// The built-in kernel families plus a user-supplied evaluator.
#[derive(Clone)]
pub enum KernelFamily {
    /// `𝕂(x, x') = min{x, x'}` on `[0, 1]`; generates a first-order Sobolev
    /// space of Lipschitz functions with `f(0) = 0`.
    FirstOrderSobolev,
    /// `𝕂(x, x') = exp(-(x - x')² / (2 b²))`.
    Gaussian { bandwidth: f64 },
    /// `𝕂(x, x') = (1 + x x')^d`; finite rank `d + 1` (polynomials of degree
    /// at most `d`).
    Polynomial { degree: u32 },
    /// Arbitrary symmetric positive-semidefinite evaluator.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl core::fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelFamily::FirstOrderSobolev => write!(f, "FirstOrderSobolev"),
            KernelFamily::Gaussian { bandwidth } => {
                write!(f, "Gaussian {{ bandwidth: {bandwidth} }}")
            }
            KernelFamily::Polynomial { degree } => write!(f, "Polynomial {{ degree: {degree} }}"),
            KernelFamily::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Decay model for the population eigenvalues of a kernel operator.
#[derive(Clone, Debug, PartialEq)]
pub enum EigendecayModel {
    /// `λ_k = scale · k^(-2 exponent)`; summable only for `exponent > 1/2`.
    PolynomialDecay { scale: f64, exponent: f64 },
    /// `λ_j = values[j-1]` for `j <= m`, zero afterwards.
    FiniteRank { values: Vec<f64> },
    /// Explicit non-increasing list, zero beyond the end.
    Explicit { values: Vec<f64> },
}

impl EigendecayModel {
    pub fn polynomial_decay(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!(
                "polynomial decay scale must be positive, got {scale}"
            )));
        }
        if !(exponent > 0.5) {
            return Err(Error::Config(format!(
                "polynomial decay exponent must exceed 1/2 for a summable spectrum, got {exponent}"
            )));
        }
        Ok(EigendecayModel::PolynomialDecay { scale, exponent })
    }

    pub fn finite_rank(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config(String::from(
                "finite-rank model needs a nonempty list of positive eigenvalues",
            )));
        }
        Ok(EigendecayModel::FiniteRank { values })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[1] > w[0]) || values.iter().any(|&v| v < 0.0) {
            return Err(Error::Config(String::from(
                "explicit eigenvalue list must be nonincreasing and nonnegative",
            )));
        }
        Ok(EigendecayModel::Explicit { values })
    }

    /// Population eigenvalue `λ_j`, `j` counted from 1.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        match self {
            EigendecayModel::PolynomialDecay { scale, exponent } => {
                scale * libm::pow(j as f64, -2.0 * exponent)
            }
            EigendecayModel::FiniteRank { values } | EigendecayModel::Explicit { values } => {
                values.get(j - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// Number of nonzero eigenvalues, when finite.
    pub fn rank(&self) -> Option<usize> {
        match self {
            EigendecayModel::PolynomialDecay { .. } => None,
            EigendecayModel::FiniteRank { values } | EigendecayModel::Explicit { values } => {
                Some(values.len())
            }
        }
    }
}

/// A positive-semidefinite kernel function plus an optional population
/// eigendecay model.
#[derive(Clone, Debug)]
pub struct Kernel {
    family: KernelFamily,
    population_decay: Option<EigendecayModel>,
}

impl Kernel {
    pub fn first_order_sobolev() -> Self {
        Kernel {
            family: KernelFamily::FirstOrderSobolev,
            population_decay: None,
        }
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::Config(format!(
                "Gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Kernel {
            family: KernelFamily::Gaussian { bandwidth },
            population_decay: None,
        })
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config(String::from(
                "polynomial kernel degree must be a positive integer",
            )));
        }
        Ok(Kernel {
            family: KernelFamily::Polynomial { degree },
            population_decay: None,
        })
    }

    pub fn custom(eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>) -> Self {
        Kernel {
            family: KernelFamily::Custom(eval),
            population_decay: None,
        }
    }

    pub fn with_population_decay(mut self, decay: EigendecayModel) -> Self {
        self.population_decay = Some(decay);
        self
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn population_decay(&self) -> Option<&EigendecayModel> {
        self.population_decay.as_ref()
    }

    pub fn name(&self) -> String {
        match &self.family {
            KernelFamily::FirstOrderSobolev => String::from("sobolev1"),
            KernelFamily::Gaussian { bandwidth } => format!("gaussian(bw={bandwidth})"),
            KernelFamily::Polynomial { degree } => format!("poly(d={degree})"),
            KernelFamily::Custom(_) => String::from("custom"),
        }
    }

    /// Evaluates `𝕂(x, x')`; symmetric in its arguments.
    pub fn evaluate(&self, x: f64, xp: f64) -> f64 {
        match &self.family {
            KernelFamily::FirstOrderSobolev => {
                if x < xp {
                    x
                } else {
                    xp
                }
            }
            KernelFamily::Gaussian { bandwidth } => {
                let d = x - xp;
                libm::exp(-d * d / (2.0 * bandwidth * bandwidth))
            }
            KernelFamily::Polynomial { degree } => libm::pow(1.0 + x * xp, *degree as f64),
            KernelFamily::Custom(eval) => eval(x, xp),
        }
    }
}

/// The empirical kernel matrix `[K]_ij = 𝕂(x_i, x_j) / n` together with its
/// eigendecomposition `K = U diag(λ̂) Uᵀ` and numerical rank.
///
/// Design points are stored sorted ascending; `permutation()[k]` gives the
/// original index of the k-th sorted point. All vectors fed to the descent
/// and stopping modules are expected in this sorted order.
#[derive(Clone, Debug)]
pub struct EmpiricalKernel {
    n: usize,
    matrix: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
    rank: usize,
    design: Vec<f64>,
    permutation: Vec<usize>,
}

/// Builds the empirical kernel matrix for `design` and eigendecomposes it.
///
/// Negative eigenvalues within `-TOL_PSD · λ̂₁` are clamped to zero; anything
/// further below zero is reported as a PSD violation naming the kernel.
pub fn build_empirical_kernel(kernel: &Kernel, design: &[f64]) -> Result<EmpiricalKernel> {
    let n = design.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "empirical kernel needs at least 2 design points, got {n}"
        )));
    }

    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&i, &j| {
        design[i]
            .partial_cmp(&design[j])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let sorted: Vec<f64> = permutation.iter().map(|&i| design[i]).collect();

    let inv_n = 1.0 / n as f64;
    let mut matrix = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            matrix.push(kernel.evaluate(sorted[i], sorted[j]) * inv_n);
        }
    }
    // Exact symmetry, independent of evaluator round-off asymmetries.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (matrix[i * n + j] + matrix[j * n + i]);
            matrix[i * n + j] = m;
            matrix[j * n + i] = m;
        }
    }

    let eig = linalg::jacobi_eigen(&matrix, n)?;
    let lambda1 = eig.values[0].max(0.0);
    let min_eig = eig.values[n - 1];
    if min_eig < -TOL_PSD * lambda1 - f64::MIN_POSITIVE {
        return Err(Error::PsdViolation {
            kernel: kernel.name(),
            min_eigenvalue: min_eig,
            lambda1,
        });
    }

    let threshold = TOL_RANK * lambda1;
    let eigenvalues: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > threshold { v } else { 0.0 })
        .collect();
    let rank = eigenvalues.iter().filter(|&&v| v > 0.0).count();

    Ok(EmpiricalKernel {
        n,
        matrix,
        eigenvalues,
        eigenvectors: eig.vectors,
        rank,
        design: sorted,
        permutation,
    })
}

impl EmpiricalKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major `n x n` matrix with entries `𝕂(x_i, x_j)/n` on the sorted
    /// design.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Nonincreasing eigenvalues `λ̂₁ ≥ … ≥ λ̂_n ≥ 0`, clamped below
    /// `TOL_RANK · λ̂₁`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row-major orthonormal matrix `U` with eigenvectors in the columns.
    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Sorted design points.
    pub fn design(&self) -> &[f64] {
        &self.design
    }

    /// `permutation()[k]` = original index of the k-th sorted design point.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// `K v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        linalg::matvec(&self.matrix, self.n, v, &mut out);
        out
    }

    /// `Uᵀ v`: coordinates of `v` in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        linalg::matvec_t(&self.eigenvectors, self.n, v, &mut out);
        out
    }

    /// `U c`: back from eigenbasis coordinates.
    pub fn from_eigenbasis(&self, c: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        linalg::matvec(&self.eigenvectors, self.n, c, &mut out);
        out
    }

    /// Squared Hilbert norm of the function interpolating `fvals` on the
    /// design: `(1/n) f(x)ᵀ K⁺ f(x)`, the pseudoinverse restricted to the
    /// range of `K`.
    pub fn hilbert_norm_sq(&self, fvals: &[f64]) -> f64 {
        let coeffs = self.to_eigenbasis(fvals);
        let mut acc = 0.0;
        for j in 0..self.rank {
            acc += coeffs[j] * coeffs[j] / self.eigenvalues[j];
        }
        acc / self.n as f64
    }
}
