use super::{norm, norm_sq, DenseMatrix, LinearSystem};
use crate::error::{Error, Result};

const PINV_RANK_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-6;

/// Householder QR, optionally with column pivoting, on column-major storage.
struct HouseholderQr {
    m: usize,
    /// Column-major `R` (upper part meaningful after factorization).
    r: Vec<f64>,
    /// Householder vectors `v_k` (length `m − k`) and their `β_k = 2 / vᵀv`.
    reflectors: Vec<(Vec<f64>, f64)>,
    /// Column `j` of `A P` is column `perm[j]` of `A`.
    perm: Vec<usize>,
}

impl HouseholderQr {
    fn factor(m: usize, n: usize, mut r: Vec<f64>, pivot: bool) -> Self {
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..n {
                    let s = norm_sq(&r[j * m + k..(j + 1) * m]);
                    if s > best_norm {
                        best_norm = s;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..m {
                        r.swap(k * m + i, best * m + i);
                    }
                    perm.swap(k, best);
                }
            }
            let x = &r[k * m + k..(k + 1) * m];
            let xnorm = norm(x);
            if xnorm == 0.0 {
                reflectors.push((vec![0.0; m - k], 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm_sq = norm_sq(&v);
            let beta = if vnorm_sq == 0.0 { 0.0 } else { 2.0 / vnorm_sq };
            r[k * m + k] = alpha;
            for i in (k + 1)..m {
                r[k * m + i] = 0.0;
            }
            for j in (k + 1)..n {
                let col = &mut r[j * m + k..(j + 1) * m];
                let s = beta * super::dot(&v, col);
                if s != 0.0 {
                    for (ci, vi) in col.iter_mut().zip(&v) {
                        *ci -= s * vi;
                    }
                }
            }
            reflectors.push((v, beta));
        }
        Self { m, r, reflectors, perm }
    }

    #[inline]
    fn r_at(&self, i: usize, j: usize) -> f64 {
        self.r[j * self.m + i]
    }

    fn apply_qt(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            reflect(&mut y[k..], v, *beta);
        }
    }

    fn apply_q(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            reflect(&mut y[k..], v, *beta);
        }
    }
}

#[inline]
fn reflect(y: &mut [f64], v: &[f64], beta: f64) {
    if beta == 0.0 {
        return;
    }
    let s = beta * super::dot(v, y);
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= s * vi;
    }
}

/// Complete orthogonal decomposition `A P = Q₁ [Lᵀ Q₂ᵀ; 0]` giving `A† y` in `O(mn)`.
pub struct Pseudoinverse {
    rows: usize,
    cols: usize,
    rank: usize,
    outer: HouseholderQr,
    /// QR of `Tᵀ` where `T` holds the leading `rank` rows of `R`.
    inner: Option<HouseholderQr>,
}

impl Pseudoinverse {
    pub fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut colmajor = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                colmajor[j * m + i] = a.get(i, j);
            }
        }
        let outer = HouseholderQr::factor(m, n, colmajor, true);
        let steps = m.min(n);
        let lead = if steps > 0 { outer.r_at(0, 0).abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| lead > 0.0 && outer.r_at(k, k).abs() > PINV_RANK_TOL * lead)
            .count();
        let inner = (rank > 0).then(|| {
            // Tᵀ is n × rank; column i of Tᵀ is row i of T.
            let mut t = vec![0.0; n * rank];
            for i in 0..rank {
                for j in i..n {
                    t[i * n + j] = outer.r_at(i, j);
                }
            }
            HouseholderQr::factor(n, rank, t, false)
        });
        Self { rows: m, cols: n, rank, outer, inner }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Minimum-norm least-squares solution `A† y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        let Some(inner) = &self.inner else {
            return x;
        };
        let mut c = y.to_vec();
        self.outer.apply_qt(&mut c);
        // T z = c[..r] with T = Lᵀ Q₂ᵀ: solve Lᵀ w = c, then z = Q₂ [w; 0].
        let r = self.rank;
        let mut z = vec![0.0; self.cols];
        for i in 0..r {
            let mut s = c[i];
            for j in 0..i {
                s -= inner.r_at(j, i) * z[j];
            }
            z[i] = s / inner.r_at(i, i);
        }
        inner.apply_q(&mut z);
        for (j, &p) in self.outer.perm.iter().enumerate() {
            x[p] = z[j];
        }
        x
    }

    /// Orthogonal projection of `v` onto `range(Aᵀ)`, i.e. `A† A v`.
    pub fn project_row_space(&self, a: &DenseMatrix, v: &[f64]) -> Vec<f64> {
        self.solve(&a.matvec(v))
    }

    /// `Π_X(x) = x − A†(A x − b)` without a consistency check.
    pub fn project(&self, system: &LinearSystem, x: &[f64]) -> Vec<f64> {
        let step = self.solve(&system.residual(x));
        x.iter().zip(&step).map(|(xi, si)| xi - si).collect()
    }

    /// `‖x − Π_X(x)‖²`
    pub fn dist_sq(&self, system: &LinearSystem, x: &[f64]) -> f64 {
        norm_sq(&self.solve(&system.residual(x)))
    }

    /// Fails with [`Error::Inconsistent`] when `‖A A† b − b‖ > 1e-6 (1 + ‖b‖)`.
    pub fn check_consistent(&self, system: &LinearSystem) -> Result<()> {
        let xb = self.solve(system.b());
        let res = norm(&system.residual(&xb));
        if res > CONSISTENCY_TOL * (1.0 + norm(system.b())) {
            return Err(Error::Inconsistent(res));
        }
        Ok(())
    }
}

/// `A† r`, the minimum-norm minimizer of `‖A x − r‖`.
pub fn least_squares_min_norm(a: &DenseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for a matrix with {} rows",
            r.len(),
            a.rows()
        )));
    }
    Ok(Pseudoinverse::new(a).solve(r))
}

/// Euclidean projection of `x` onto `{z : A z = b}`.
pub fn project_onto_solution_set(system: &LinearSystem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != system.cols() {
        return Err(Error::DimensionMismatch("iterate length".into()));
    }
    let pinv = Pseudoinverse::new(system.a());
    pinv.check_consistent(system)?;
    Ok(pinv.project(system, x))
}
