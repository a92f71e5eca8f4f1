//! Dense real matrix kernel sized for desk-scale systems.

mod eigen;
mod qr;

pub use eigen::{spectral_norm_sq, sym_eigen, sym_eigenvalues, SpectralSummary, RANK_TOLERANCE};
pub use qr::{least_squares_min_norm, project_onto_solution_set, Pseudoinverse};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows with norm below this are rejected by [`normalize_rows`].
pub const ZERO_ROW_TOL: f64 = 1e-14;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(m, n, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), &mut out);
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                axpy(a, other.row(k), dst);
            }
        }
        out
    }

    /// `A Aᵀ` (rows × rows).
    pub fn gram_rows(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = Self::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = dot(self.row(i), self.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// `Aᵀ A` (cols × cols).
    pub fn gram_cols(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for p in 0..n {
                let rp = r[p];
                if rp == 0.0 {
                    continue;
                }
                for q in p..n {
                    g.data[p * n + q] += rp * r[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    /// Submatrix made of the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        assert!(!idx.is_empty());
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.rows).map(|i| norm_sq(self.row(i))).collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A linear system `A x = b`, optionally carrying a known solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    a: DenseMatrix,
    b: Vec<f64>,
    planted_solution: Option<Vec<f64>>,
    normalized: bool,
}

impl LinearSystem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {} but matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        Ok(Self { a, b, planted_solution: None, normalized: false })
    }

    /// Attaches a known solution after checking `‖A x − b‖ ≤ 1e-10 (1 + ‖b‖)`.
    pub fn with_planted_solution(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "planted solution has length {} but matrix has {} columns",
                x.len(),
                self.a.cols()
            )));
        }
        let res = norm(&self.residual(&x));
        if res > 1e-10 * (1.0 + norm(&self.b)) {
            return Err(Error::Inconsistent(res));
        }
        self.planted_solution = Some(x);
        Ok(self)
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn planted_solution(&self) -> Option<&[f64]> {
        self.planted_solution.as_deref()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// `A x − b`
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    /// Re-checks the unit-row-norm flag against the data (within 1e-12).
    pub fn rows_are_unit(&self) -> bool {
        self.a.row_norms_sq().iter().all(|&s| (s.sqrt() - 1.0).abs() <= 1e-12)
    }
}

/// Original row norms recorded by [`normalize_rows`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowScaling {
    pub scales: Vec<f64>,
}

impl RowScaling {
    /// Maps a normalized system's rows back to the original scaling.
    pub fn restore(&self, system: &LinearSystem) -> Result<LinearSystem> {
        if self.scales.len() != system.rows() {
            return Err(Error::DimensionMismatch("scaling length".into()));
        }
        let n = system.cols();
        let mut data = system.a.data.clone();
        let mut b = system.b.clone();
        for (i, &s) in self.scales.iter().enumerate() {
            data[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= s);
            b[i] *= s;
        }
        Ok(LinearSystem {
            a: DenseMatrix::new(system.rows(), n, data)?,
            b,
            planted_solution: system.planted_solution.clone(),
            normalized: false,
        })
    }
}

/// Divides every row `a_i` and entry `b_i` by `‖a_i‖`; the solution set is unchanged.
pub fn normalize_rows(system: &LinearSystem) -> Result<(LinearSystem, RowScaling)> {
    let (m, n) = (system.rows(), system.cols());
    let mut scales = Vec::with_capacity(m);
    let mut data = Vec::with_capacity(m * n);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let row = system.a.row(i);
        let s = norm(row);
        if s < ZERO_ROW_TOL {
            return Err(Error::ZeroRow(i));
        }
        data.extend(row.iter().map(|v| v / s));
        b.push(system.b[i] / s);
        scales.push(s);
    }
    let out = LinearSystem {
        a: DenseMatrix::new(m, n, data)?,
        b,
        planted_solution: system.planted_solution.clone(),
        normalized: true,
    };
    Ok((out, RowScaling { scales }))
}
