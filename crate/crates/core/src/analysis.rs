//! Stochastic conditioning, predicted rates and paving quality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_sq, sym_eigenvalues, DenseMatrix, LinearSystem};
use crate::par::{map_indexed, map_slice, Execution};
use crate::rng;
use crate::sampling::{enumerate_supports, membership_probabilities, sample_block, Paving, SamplingSpec, MAX_SUPPORTS};
use crate::stepsize::WeightBounds;

/// How `λ_max^block` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockLambdaMode {
    ExactEnumeration,
    PartitionMax,
    /// Maximum over sampled supports; a lower bound on the true value.
    MonteCarloEstimate { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockLambda {
    pub value: f64,
    pub mode: BlockLambdaMode,
}

impl BlockLambda {
    /// Rates derived from a sampled estimate may be too good.
    pub fn is_estimate(&self) -> bool {
        matches!(self.mode, BlockLambdaMode::MonteCarloEstimate { .. })
    }
}

/// `λ_max(A_Jᵀ diag(1/‖a_i‖²) A_J)`, evaluated on the smaller of the two Gram forms.
pub fn normalized_block_lambda(a: &DenseMatrix, block: &[usize]) -> Result<f64> {
    let n = a.cols();
    let inv: Vec<f64> = block.iter().map(|&i| 1.0 / a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let gram = if block.len() <= n {
        let t = block.len();
        let mut g = DenseMatrix::zeros(t, t);
        for p in 0..t {
            for q in p..t {
                let v = crate::linalg::dot(a.row(block[p]), a.row(block[q])) * inv[p] * inv[q];
                g.set(p, q, v);
                g.set(q, p, v);
            }
        }
        g
    } else {
        let mut g = DenseMatrix::zeros(n, n);
        for (&i, s) in block.iter().zip(&inv) {
            let row = a.row(i);
            for p in 0..n {
                for q in p..n {
                    let v = g.get(p, q) + row[p] * row[q] * s * s;
                    g.set(p, q, v);
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.set(p, q, g.get(q, p));
            }
        }
        g
    };
    Ok(sym_eigenvalues(&gram)?.lambda_max)
}

/// `λ_max^block` on the default execution.
pub fn block_lambda_max(system: &LinearSystem, spec: &SamplingSpec, budget: usize, seed: u64) -> Result<BlockLambda> {
    block_lambda_max_with(system, spec, budget, seed, Execution::default())
}

/// Exact for partitions and for uniform subsets with at most `MAX_SUPPORTS` supports;
/// otherwise the maximum over `budget` supports drawn from `seed`.
pub fn block_lambda_max_with(
    system: &LinearSystem,
    spec: &SamplingSpec,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<BlockLambda> {
    if spec.rows() != system.rows() {
        return Err(Error::DimensionMismatch("sampling spec and system rows differ".into()));
    }
    let a = system.a();
    let (blocks, mode) = match spec {
        SamplingSpec::Partition { .. } => {
            (enumerate_supports(spec)?.into_iter().map(|(b, _)| b).collect(), BlockLambdaMode::PartitionMax)
        }
        SamplingSpec::UniformSubset { .. } if spec.support_count() <= MAX_SUPPORTS => {
            (enumerate_supports(spec)?.into_iter().map(|(b, _)| b).collect(), BlockLambdaMode::ExactEnumeration)
        }
        SamplingSpec::UniformSubset { .. } => {
            if budget == 0 {
                return Err(Error::InvalidParameter("sampling budget must be positive".into()));
            }
            let mut rng = rng::from_seed(seed);
            let blocks: Vec<Vec<usize>> = (0..budget).map(|_| sample_block(spec, &mut rng)).collect();
            (blocks, BlockLambdaMode::MonteCarloEstimate { samples: budget })
        }
    };
    let values = map_slice(&blocks, exec, |b| normalized_block_lambda(a, b));
    let mut value = 0.0_f64;
    for v in values {
        value = value.max(v?);
    }
    Ok(BlockLambda { value, mode })
}

/// `W = Aᵀ diag(p_i/‖a_i‖²) A`
pub fn build_w(system: &LinearSystem, spec: &SamplingSpec) -> Result<DenseMatrix> {
    if spec.rows() != system.rows() {
        return Err(Error::DimensionMismatch("sampling spec and system rows differ".into()));
    }
    let a = system.a();
    let n = a.cols();
    let p = membership_probabilities(spec);
    let norms = a.row_norms_sq();
    let mut w = DenseMatrix::zeros(n, n);
    for i in 0..a.rows() {
        let s = p[i] / norms[i];
        if s == 0.0 {
            continue;
        }
        let row = a.row(i);
        for r in 0..n {
            let sr = s * row[r];
            for c in r..n {
                w.set(r, c, w.get(r, c) + sr * row[c]);
            }
        }
    }
    for r in 0..n {
        for c in 0..r {
            w.set(r, c, w.get(c, r));
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    pub rows: usize,
    pub cols: usize,
    /// Largest block size with positive probability.
    pub tau: usize,
    pub lambda_max_block: f64,
    pub lambda_max_block_mode: BlockLambdaMode,
    pub w: DenseMatrix,
    pub lambda_min_nz_w: f64,
    pub lambda_max_w: f64,
    /// `‖A‖²`
    pub spectral_sq: f64,
    /// `‖A‖_F²`
    pub frobenius_sq: f64,
    /// Zero whenever `rank(A) < m`.
    pub lambda_min_aat: f64,
    pub lambda_max_aat: f64,
    pub lambda_min_nz_aat: f64,
    pub rank: usize,
}

impl ConditioningReport {
    pub fn aat_singular(&self) -> bool {
        self.rank < self.rows
    }
}

/// Every conditioning quantity for `system` under `spec`.
pub fn conditioning_report(
    system: &LinearSystem,
    spec: &SamplingSpec,
    budget: usize,
    seed: u64,
) -> Result<ConditioningReport> {
    let a = system.a();
    let (m, n) = (a.rows(), a.cols());
    let block = block_lambda_max(system, spec, budget, seed)?;
    let w = build_w(system, spec)?;
    let w_spec = sym_eigenvalues(&w)?;
    let gram = if m <= n { a.gram_rows() } else { a.gram_cols() };
    let g_spec = sym_eigenvalues(&gram)?;
    let rank = g_spec.rank_estimate;
    let lambda_min_aat = if rank < m { 0.0 } else { g_spec.lambda_min };
    Ok(ConditioningReport {
        rows: m,
        cols: n,
        tau: spec.max_block_size(),
        lambda_max_block: block.value,
        lambda_max_block_mode: block.mode,
        w,
        lambda_min_nz_w: w_spec.lambda_min_nz,
        lambda_max_w: w_spec.lambda_max,
        spectral_sq: g_spec.lambda_max,
        frobenius_sq: a.frobenius_sq(),
        lambda_min_aat,
        lambda_max_aat: g_spec.lambda_max,
        lambda_min_nz_aat: g_spec.lambda_min_nz,
        rank,
    })
}

/// Contraction factors per iteration predicted by each convergence theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    /// `1 − (2−δ) ω_min² λ_min^nz(W) / (ω_max² λ_max^block)`
    pub rate_constant_stepsize: f64,
    /// `1 − δ(2−δ) ω_min λ_min^nz(W) / (ω_max λ_max^block)`
    pub rate_adaptive: f64,
    /// `1 − λ_min^nz(AᵀA) / (6 ln(1+m) ‖A‖²)`
    pub rate_paving: f64,
    /// Single-row Kaczmarz with `α = 1`: `1 − λ_min^nz(AᵀA) / ‖A‖_F²`.
    pub rate_basic: f64,
    /// `(√u − √ℓ)/(√u + √ℓ)`; absent when `AAᵀ` is singular.
    pub cheb_factor: Option<f64>,
    /// `τ / λ_max^block`
    pub speedup_vs_basic: f64,
    /// `‖A‖² < m / (6 ln(1+m))`
    pub diversity_ok: bool,
    /// `λ_max^block` was a sampled estimate, so the rates may be optimistic.
    pub optimistic: bool,
}

fn require(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::MissingSpectrum(format!("{what} = {value}")))
    }
}

pub fn predict_rates(report: &ConditioningReport, weights: WeightBounds, delta: f64, tau: usize) -> Result<RatePrediction> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let lb = require(report.lambda_max_block, "lambda_max_block")?;
    let lw = require(report.lambda_min_nz_w, "lambda_min_nz(W)")?;
    let lnz = require(report.lambda_min_nz_aat, "lambda_min_nz(A^T A)")?;
    let spectral = require(report.spectral_sq, "||A||^2")?;
    let frob = require(report.frobenius_sq, "||A||_F^2")?;
    let WeightBounds { omega_min, omega_max } = weights;
    let m = report.rows as f64;
    let log_m = (1.0 + m).ln();
    let cheb_factor = if report.aat_singular() {
        None
    } else {
        let lmin = require(report.lambda_min_aat, "lambda_min(AA^T)")?;
        Some(crate::stepsize::chebyshev_factor(lmin / m, report.lambda_max_aat / m))
    };
    Ok(RatePrediction {
        rate_constant_stepsize: 1.0 - (2.0 - delta) * omega_min * omega_min * lw / (omega_max * omega_max * lb),
        rate_adaptive: 1.0 - delta * (2.0 - delta) * omega_min * lw / (omega_max * lb),
        rate_paving: 1.0 - lnz / (6.0 * log_m * spectral),
        rate_basic: 1.0 - lnz / frob,
        cheb_factor,
        speedup_vs_basic: tau as f64 / lb,
        diversity_ok: spectral < m / (6.0 * log_m),
        optimistic: matches!(report.lambda_max_block_mode, BlockLambdaMode::MonteCarloEstimate { .. }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PavingQuality {
    pub lambda_max_block: f64,
    /// `6 ln(1+m)`
    pub bound: f64,
    pub satisfied: bool,
    /// `6 log₂(1+m)`
    pub bound_log2: f64,
    pub satisfied_log2: bool,
}

/// Compares `λ_max^block` of a paving against `6 log(1+m)`.
pub fn paving_quality(system: &LinearSystem, paving: &Paving) -> Result<PavingQuality> {
    paving_quality_with(system, paving, Execution::default())
}

pub fn paving_quality_with(system: &LinearSystem, paving: &Paving, exec: Execution) -> Result<PavingQuality> {
    if !system.rows_are_unit() {
        return Err(Error::NotNormalized);
    }
    if paving.rows() != system.rows() {
        return Err(Error::DimensionMismatch("paving and system rows differ".into()));
    }
    let a = system.a();
    let values = map_slice(&paving.blocks, exec, |b| normalized_block_lambda(a, b));
    let mut lambda = 0.0_f64;
    for v in values {
        lambda = lambda.max(v?);
    }
    let m = system.rows() as f64;
    let bound = 6.0 * (1.0 + m).ln();
    let bound_log2 = 6.0 * (1.0 + m).log2();
    Ok(PavingQuality {
        lambda_max_block: lambda,
        bound,
        satisfied: lambda <= bound,
        bound_log2,
        satisfied_log2: lambda <= bound_log2,
    })
}

/// Fraction of `count` random pavings (seeds `seed..seed+count`) meeting the ln bound.
pub fn paving_success_rate(system: &LinearSystem, ell: usize, count: usize, seed: u64, exec: Execution) -> Result<f64> {
    let verdicts = map_indexed(count, exec, |t| {
        let paving = Paving::random(seed.wrapping_add(t as u64), system.rows(), ell)?;
        paving_quality_with(system, &paving, Execution::Sequential).map(|q| q.satisfied)
    });
    let mut ok = 0usize;
    for v in verdicts {
        ok += usize::from(v?);
    }
    Ok(ok as f64 / count.max(1) as f64)
}

/// `‖A‖²` of the system matrix.
pub fn spectral_sq(system: &LinearSystem) -> f64 {
    spectral_norm_sq(system.a())
}
