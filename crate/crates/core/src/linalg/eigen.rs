use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// An eigenvalue counts as nonzero iff it exceeds `RANK_TOLERANCE · λ_max`.
pub const RANK_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Smallest eigenvalue above the rank threshold; `0.0` when the matrix is zero.
    pub lambda_min_nz: f64,
    pub rank_estimate: usize,
}

impl SpectralSummary {
    fn from_sorted(eigenvalues: Vec<f64>) -> Self {
        let lambda_max = eigenvalues[0];
        let lambda_min = *eigenvalues.last().unwrap();
        let threshold = RANK_TOLERANCE * lambda_max;
        let nonzero: Vec<f64> = eigenvalues.iter().copied().filter(|&v| v > threshold).collect();
        Self {
            lambda_max,
            lambda_min,
            lambda_min_nz: nonzero.last().copied().unwrap_or(0.0),
            rank_estimate: nonzero.len(),
            eigenvalues,
        }
    }

    /// True when the smallest eigenvalue is numerically zero.
    pub fn is_singular(&self) -> bool {
        self.rank_estimate < self.eigenvalues.len()
    }
}

fn check_symmetric(s: &DenseMatrix) -> Result<()> {
    let n = s.rows();
    if n != s.cols() {
        return Err(Error::NotSquare { rows: n, cols: s.cols() });
    }
    let scale = s.max_abs();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Cyclic Jacobi on a symmetrized copy. Returns (eigenvalues, eigenvectors by column),
/// both sorted by descending eigenvalue.
fn jacobi(s: &DenseMatrix, want_vectors: bool) -> (Vec<f64>, Option<DenseMatrix>) {
    let n = s.rows();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (s.get(i, j) + s.get(j, i));
        }
    }
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });

    let total: f64 = a.iter().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // rotation angle zeroing a[p][q]
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - sn * vkq;
                        v[k * n + q] = sn * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut out = DenseMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                out.set(k, col, v[k * n + src]);
            }
        }
        out
    });
    (values, vectors)
}

/// Eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(s: &DenseMatrix) -> Result<SpectralSummary> {
    check_symmetric(s)?;
    let (values, _) = jacobi(s, false);
    Ok(SpectralSummary::from_sorted(values))
}

/// Eigenvalues plus orthonormal eigenvectors (columns), both sorted descending.
pub fn sym_eigen(s: &DenseMatrix) -> Result<(SpectralSummary, DenseMatrix)> {
    check_symmetric(s)?;
    let (values, vectors) = jacobi(s, true);
    Ok((SpectralSummary::from_sorted(values), vectors.expect("vectors requested")))
}

/// `‖A‖² = λ_max(AᵀA)`, computed on the smaller Gram matrix.
pub fn spectral_norm_sq(a: &DenseMatrix) -> f64 {
    let gram = if a.rows() <= a.cols() { a.gram_rows() } else { a.gram_cols() };
    sym_eigenvalues(&gram).expect("Gram matrices are symmetric").lambda_max
}
