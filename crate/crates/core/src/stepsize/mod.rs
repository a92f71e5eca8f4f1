//! Stepsize policies and row weights.

mod chebyshev;

pub use chebyshev::{
    chebyshev_eval, chebyshev_factor, chebyshev_interval_eval, chebyshev_roots,
    chebyshev_schedule_pd, chebyshev_schedule_singular, leja_order, min_deviation_bound, ChebyshevSchedule, Kappa,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::sampling::SamplingSpec;

/// `‖d‖²` below this makes the adaptive step a no-op.
pub const SKIP_DIRECTION_EPS: f64 = 1e-28;

/// How the convex weights `ω_i` over a drawn block are formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `ω_i = 1/|J|`
    #[default]
    Uniform,
    /// `ω_i = ‖a_i‖² / Σ_{j∈J} ‖a_j‖²`
    RowNormSq,
    /// `ω_i = v_i / Σ_{j∈J} v_j` for a positive per-row vector `v`.
    Explicit { values: Vec<f64> },
}

/// Extreme realized weights over every support of a sampling spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub omega_min: f64,
    pub omega_max: f64,
}

impl WeightBounds {
    /// Bounds of uniform weights on blocks of size exactly `tau`.
    pub fn uniform(tau: usize) -> Self {
        let w = 1.0 / tau as f64;
        Self { omega_min: w, omega_max: w }
    }
}

impl WeightScheme {
    fn row_values(&self, row_norms_sq: &[f64]) -> Result<Option<Vec<f64>>> {
        match self {
            WeightScheme::Uniform => Ok(None),
            WeightScheme::RowNormSq => Ok(Some(row_norms_sq.to_vec())),
            WeightScheme::Explicit { values } => {
                if values.len() != row_norms_sq.len() {
                    return Err(Error::InvalidWeights(format!(
                        "{} explicit weights for {} rows",
                        values.len(),
                        row_norms_sq.len()
                    )));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidWeights("explicit weights must be positive".into()));
                }
                Ok(Some(values.clone()))
            }
        }
    }

    pub fn validate(&self, rows: usize) -> Result<()> {
        self.row_values(&vec![1.0; rows]).map(|_| ())
    }

    /// Weights for `block`; positive and summing to one.
    pub fn realize(&self, block: &[usize], row_norms_sq: &[f64]) -> Vec<f64> {
        match self {
            WeightScheme::Uniform => vec![1.0 / block.len() as f64; block.len()],
            WeightScheme::RowNormSq => normalize_over(block, row_norms_sq),
            WeightScheme::Explicit { values } => normalize_over(block, values),
        }
    }

    /// `ω_min`, `ω_max` over all supports of `spec`.
    pub fn bounds(&self, spec: &SamplingSpec, row_norms_sq: &[f64]) -> Result<WeightBounds> {
        if spec.rows() != row_norms_sq.len() {
            return Err(Error::DimensionMismatch("sampling spec and matrix rows differ".into()));
        }
        let values = self.row_values(row_norms_sq)?.unwrap_or_else(|| vec![1.0; row_norms_sq.len()]);
        match spec {
            SamplingSpec::UniformSubset { tau, .. } => Ok(subset_bounds(&values, *tau)),
            SamplingSpec::Partition { blocks, probs } => {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0_f64;
                for (block, _) in blocks.iter().zip(probs).filter(|(_, p)| **p > 0.0) {
                    for w in normalize_over(block, &values) {
                        lo = lo.min(w);
                        hi = hi.max(w);
                    }
                }
                Ok(WeightBounds { omega_min: lo, omega_max: hi })
            }
        }
    }
}

fn normalize_over(block: &[usize], values: &[f64]) -> Vec<f64> {
    let total: f64 = block.iter().map(|&i| values[i]).sum();
    block.iter().map(|&i| values[i] / total).collect()
}

/// Exact extremes of `v_i / Σ_J v` over all `tau`-subsets containing `i`.
fn subset_bounds(values: &[f64], tau: usize) -> WeightBounds {
    if tau == 1 {
        return WeightBounds { omega_min: 1.0, omega_max: 1.0 };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    // smallest value against the tau−1 largest others
    let small = sorted[0];
    let others_hi: f64 = sorted[m - (tau - 1)..].iter().sum();
    // largest value against the tau−1 smallest others
    let large = sorted[m - 1];
    let others_lo: f64 = sorted[..tau - 1].iter().sum();
    WeightBounds { omega_min: small / (small + others_hi), omega_max: large / (large + others_lo) }
}

/// How `α_k` is chosen at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepsizePolicy {
    /// Fixed `α ∈ (0, 2)`.
    ClassicConstant { alpha: f64 },
    /// `α = (2−δ) ω_min / (ω_max² λ_max^block)`.
    ExtrapolatedConstant { delta: f64, lambda_max_block: f64 },
    /// `α_k = (2−δ) L_k`.
    Adaptive { delta: f64 },
    /// Chebyshev roots on `[λ_min(AAᵀ), λ_max(AAᵀ)]`; the horizon fixes the number of iterations.
    ChebyshevPd { horizon: usize, lambda_min: f64, lambda_max: f64, #[serde(default)] kappa: Kappa },
    /// Chebyshev roots for singular `AAᵀ`.
    ChebyshevSingular { horizon: usize, lambda_max: f64, #[serde(default)] kappa: Kappa },
}

impl StepsizePolicy {
    pub fn validate(&self) -> Result<()> {
        let check_delta = |d: f64| {
            if d > 0.0 && d <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {d}")))
            }
        };
        match self {
            StepsizePolicy::ClassicConstant { alpha } => {
                if *alpha > 0.0 && *alpha < 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("classic alpha must lie in (0, 2), got {alpha}")))
                }
            }
            StepsizePolicy::ExtrapolatedConstant { delta, lambda_max_block } => {
                check_delta(*delta)?;
                if *lambda_max_block > 0.0 {
                    Ok(())
                } else {
                    Err(Error::NonPositiveConditioning(*lambda_max_block))
                }
            }
            StepsizePolicy::Adaptive { delta } => check_delta(*delta),
            StepsizePolicy::ChebyshevPd { horizon, .. } | StepsizePolicy::ChebyshevSingular { horizon, .. } => {
                if *horizon == 0 {
                    Err(Error::InvalidParameter("Chebyshev horizon must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            StepsizePolicy::ChebyshevPd { horizon, .. } | StepsizePolicy::ChebyshevSingular { horizon, .. } => {
                Some(*horizon)
            }
            _ => None,
        }
    }

    /// Precomputes the schedule of a Chebyshev policy for an `m`-row system.
    pub fn schedule(&self, m: usize) -> Result<Option<ChebyshevSchedule>> {
        match self {
            StepsizePolicy::ChebyshevPd { horizon, lambda_min, lambda_max, kappa } => {
                let perm = kappa.resolve(*horizon)?;
                chebyshev_schedule_pd(*lambda_min, *lambda_max, m, *horizon, &perm).map(Some)
            }
            StepsizePolicy::ChebyshevSingular { horizon, lambda_max, kappa } => {
                // the schedule uses all roots of T_{k+1} but the most negative one
                let nodes = chebyshev_roots(*horizon + 1);
                let perm = kappa.resolve_on(&nodes[..*horizon])?;
                chebyshev_schedule_singular(*lambda_max, m, *horizon, &perm).map(Some)
            }
            _ => Ok(None),
        }
    }
}

/// `α = (2−δ) ω_min / (ω_max² λ_max^block)`; with uniform weights `1/τ` this is `(2−δ) τ / λ_max^block`.
pub fn constant_extrapolated_alpha(weights: WeightBounds, lambda_max_block: f64, delta: f64) -> Result<f64> {
    if !(lambda_max_block > 0.0) {
        return Err(Error::NonPositiveConditioning(lambda_max_block));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let WeightBounds { omega_min, omega_max } = weights;
    if !(omega_min > 0.0 && omega_min <= omega_max && omega_max <= 1.0) {
        return Err(Error::InvalidWeights(format!("bounds [{omega_min}, {omega_max}]")));
    }
    Ok((2.0 - delta) * omega_min / (omega_max * omega_max * lambda_max_block))
}

/// Outcome of the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AdaptiveStep {
    Step { alpha: f64, l: f64 },
    /// The averaged direction vanishes; no step is taken.
    Skip,
}

/// Averaged projection direction `d = Σ ω_i r_i/‖a_i‖² a_i` and `Σ ω̄_i r_i²`.
///
/// Terms are accumulated in the order given, starting from the first term, so a
/// single-row block reproduces the plain Kaczmarz update bit for bit.
pub(crate) fn averaged_direction<'a>(
    rows: impl Iterator<Item = &'a [f64]>,
    residuals: &[f64],
    weights: &[f64],
    norms_sq: &[f64],
    dim: usize,
) -> (Vec<f64>, f64) {
    let mut d: Option<Vec<f64>> = None;
    let mut weighted_sq = 0.0;
    for (((row, &r), &w), &ns) in rows.zip(residuals).zip(weights).zip(norms_sq) {
        let coef = w * (r / ns);
        weighted_sq += coef * r;
        match d.as_mut() {
            None => d = Some(row.iter().map(|v| coef * v).collect()),
            Some(acc) => crate::linalg::axpy(coef, row, acc),
        }
    }
    (d.unwrap_or_else(|| vec![0.0; dim]), weighted_sq)
}

pub(crate) fn adaptive_from_direction(d: &[f64], weighted_sq: f64, residuals: &[f64], delta: f64) -> AdaptiveStep {
    let dn = norm_sq(d);
    if residuals.iter().all(|&r| r == 0.0) || dn < SKIP_DIRECTION_EPS {
        return AdaptiveStep::Skip;
    }
    let l = weighted_sq / dn;
    AdaptiveStep::Step { alpha: (2.0 - delta) * l, l }
}

/// `L = Σ ω̄_i r_i² / ‖Σ ω̄_i r_i a_i‖²` with `ω̄_i = ω_i/‖a_i‖²`, and `α = (2−δ) L`.
pub fn adaptive_alpha(rows: &[&[f64]], residuals: &[f64], weights: &[f64], delta: f64) -> Result<AdaptiveStep> {
    if rows.is_empty() || rows.len() != residuals.len() || rows.len() != weights.len() {
        return Err(Error::DimensionMismatch("block rows, residuals and weights must align".into()));
    }
    let dim = rows[0].len();
    let norms: Vec<f64> = rows.iter().map(|r| norm_sq(r)).collect();
    if let Some(i) = norms.iter().position(|&n| n < crate::linalg::ZERO_ROW_TOL * crate::linalg::ZERO_ROW_TOL) {
        return Err(Error::ZeroRow(i));
    }
    let (d, weighted_sq) = averaged_direction(rows.iter().copied(), residuals, weights, &norms, dim);
    Ok(adaptive_from_direction(&d, weighted_sq, residuals, delta))
}
