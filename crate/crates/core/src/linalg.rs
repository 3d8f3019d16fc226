//! Minimal dense linear algebra: just what the eigendecomposition and the
//! spectral formulas need. Matrices are row-major `Vec<f64>` slabs.

use alloc::vec;
use alloc::vec::Vec;

use crate::Error;

/// `y = A x` for a dense row-major `n x n` matrix.
pub fn matvec(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(y.len(), n);
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            acc += row[j] * x[j];
        }
        y[i] = acc;
    }
}

/// `y = A^T x`; used for projections onto the eigenbasis (columns of `U`).
pub fn matvec_t(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        y[j] = 0.0;
    }
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let xi = x[i];
        for j in 0..n {
            y[j] += row[j] * xi;
        }
    }
}

fn frobenius_norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|v| v * v).sum())
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a[i * n + j];
                acc += v * v;
            }
        }
    }
    libm::sqrt(acc)
}

/// Result of the symmetric eigensolver, eigenpairs sorted by descending
/// eigenvalue. `vectors` is row-major with eigenvectors in the columns.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    /// Sweeps used; kept for convergence diagnostics in tests.
    #[allow(dead_code)]
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations for a symmetric matrix.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`; capped at 100 sweeps. Deterministic and accurate for
/// the matrix sizes used here (n up to a couple thousand).
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymEigen, Error> {
    const MAX_SWEEPS: usize = 100;
    debug_assert_eq!(matrix.len(), n * n);

    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = frobenius_norm(&a);
    let threshold = 1e-12 * norm;

    let mut sweeps = 0;
    if norm > 0.0 {
        while off_diagonal_norm(&a, n) > threshold {
            if sweeps >= MAX_SWEEPS {
                return Err(Error::EigenNonConvergence { sweeps });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                    } else {
                        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                    };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;

                    // Rotate rows/columns p and q of A.
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    // Accumulate the rotation into V.
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
            sweeps += 1;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (li, lj) = (a[i * n + i], a[j * n + j]);
        lj.partial_cmp(&li).unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        values.push(a[src * n + src]);
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}
