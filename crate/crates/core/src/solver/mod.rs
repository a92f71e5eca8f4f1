//! Iteration kernels, the run loop and trace export.

mod monte_carlo;

pub use monte_carlo::{exact_one_step_expectation, run_monte_carlo, run_monte_carlo_with, MonteCarloSummary};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, sym_eigenvalues, LinearSystem, Pseudoinverse, ZERO_ROW_TOL};
use crate::par::{map_indexed, Execution};
use crate::rng::{self, Rng};
use crate::sampling::{membership_probabilities, sample_block, SamplingSpec};
use crate::stepsize::{
    adaptive_from_direction, averaged_direction, constant_extrapolated_alpha, AdaptiveStep, ChebyshevSchedule,
    StepsizePolicy, WeightScheme,
};

/// Consecutive skipped updates after which a run is declared stalled.
pub const STALL_LIMIT: usize = 100;

/// Below this many block entries the per-row residuals are computed inline.
const PAR_ROW_WORK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One row per iteration.
    Basic,
    /// Weighted average of row projections, scaled by `α`.
    Rbk,
    /// Projection onto the block solution set via `A_J†`.
    BlockProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    #[default]
    NormsOnly,
    FullIterates,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub weights: WeightScheme,
    pub stepsize: StepsizePolicy,
    pub max_iters: usize,
    /// Defaults to `1e-8 (1 + ‖b‖)`.
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trace_level: TraceLevel,
    /// Record `‖x^k − Π_X(x^k)‖²` for every iterate.
    #[serde(default = "default_true")]
    pub diagnostics: bool,
    /// Starting point; zero when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(method: Method, sampling: SamplingSpec, stepsize: StepsizePolicy, max_iters: usize) -> Self {
        Self {
            method,
            sampling,
            weights: WeightScheme::Uniform,
            stepsize,
            max_iters,
            residual_tol: None,
            seed: 0,
            trace_level: TraceLevel::NormsOnly,
            diagnostics: true,
            x0: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weights(mut self, weights: WeightScheme) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = Some(tol);
        self
    }

    pub fn with_trace_level(mut self, level: TraceLevel) -> Self {
        self.trace_level = level;
        self
    }
}

/// Stepsize applied at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaUsed {
    /// The record of `x⁰`; no step was taken.
    Initial,
    Step(f64),
    Skip,
}

impl AlphaUsed {
    pub fn value(self) -> Option<f64> {
        match self {
            AlphaUsed::Step(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEvent {
    pub k: usize,
    /// Rows used to produce `x^k` (empty for `k = 0`).
    #[serde(with = "one_based")]
    pub block: Vec<usize>,
    pub alpha_used: AlphaUsed,
    /// `L_k` of the adaptive rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive_l: Option<f64>,
    pub residual_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate: Option<Vec<f64>>,
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(idx: &[usize], s: S) -> Result<S::Ok, S::Error> {
        idx.iter().map(|i| i + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let raw = Vec::<usize>::deserialize(d)?;
        raw.into_iter()
            .map(|i| i.checked_sub(1).ok_or_else(|| serde::de::Error::custom("row indices are 1-based")))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub config: SolverConfig,
    pub residual_tol: f64,
    pub events: Vec<IterationEvent>,
    pub status: TerminalStatus,
    pub final_iterate: Vec<f64>,
}

impl SolverTrace {
    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.events.last().map_or(0, |e| e.k)
    }

    /// CSV with columns `k,block_size,alpha,residual_norm,dist_sq`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,block_size,alpha,residual_norm,dist_sq\n");
        for e in &self.events {
            let alpha = match e.alpha_used {
                AlphaUsed::Initial => String::new(),
                AlphaUsed::Step(a) => format!("{a:e}"),
                AlphaUsed::Skip => "skip".to_string(),
            };
            let dist = e.dist_sq.map(|d| format!("{d:e}")).unwrap_or_default();
            writeln!(out, "{},{},{},{:e},{}", e.k, e.block.len(), alpha, e.residual_norm, dist).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `x − α ((rowᵀx − b_i)/‖row‖²) row`
pub fn basic_kaczmarz_step(x: &[f64], row: &[f64], b_i: f64, alpha: f64) -> Result<Vec<f64>> {
    if x.len() != row.len() {
        return Err(Error::DimensionMismatch("row and iterate lengths differ".into()));
    }
    let ns = norm_sq(row);
    if ns < ZERO_ROW_TOL * ZERO_ROW_TOL {
        return Err(Error::ZeroRow(0));
    }
    let mut out = x.to_vec();
    basic_in_place(&mut out, row, b_i, ns, alpha);
    Ok(out)
}

fn basic_in_place(x: &mut [f64], row: &[f64], b_i: f64, ns: f64, alpha: f64) {
    let c = (dot(row, x) - b_i) / ns;
    for (xj, aj) in x.iter_mut().zip(row) {
        *xj -= alpha * (c * aj);
    }
}

fn check_block(system: &LinearSystem, x: &[f64], block: &[usize]) -> Result<()> {
    if block.is_empty() {
        return Err(Error::InvalidSampling("empty block".into()));
    }
    if x.len() != system.cols() {
        return Err(Error::DimensionMismatch("iterate length".into()));
    }
    if let Some(&i) = block.iter().find(|&&i| i >= system.rows()) {
        return Err(Error::IndexOutOfRange { index: i, len: system.rows() });
    }
    Ok(())
}

/// `x − α Σ_{i∈J} ω_i ((a_iᵀx − b_i)/‖a_i‖²) a_i`, reduced in the order of `block`.
pub fn rbk_step(x: &[f64], system: &LinearSystem, block: &[usize], weights: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_block(system, x, block)?;
    if weights.len() != block.len() {
        return Err(Error::InvalidWeights("one weight per block row required".into()));
    }
    let a = system.a();
    let norms: Vec<f64> = block.iter().map(|&i| norm_sq(a.row(i))).collect();
    if let Some(p) = norms.iter().position(|&n| n < ZERO_ROW_TOL * ZERO_ROW_TOL) {
        return Err(Error::ZeroRow(block[p]));
    }
    let r = block_residuals(system, x, block, Execution::Sequential);
    let (d, _) = averaged_direction(block.iter().map(|&i| a.row(i)), &r, weights, &norms, x.len());
    let mut out = x.to_vec();
    for (xj, dj) in out.iter_mut().zip(&d) {
        *xj -= alpha * dj;
    }
    Ok(out)
}

/// `x − α A_J†(A_J x − b_J)`
pub fn block_projection_step(x: &[f64], system: &LinearSystem, block: &[usize], alpha: f64) -> Result<Vec<f64>> {
    check_block(system, x, block)?;
    let mut out = x.to_vec();
    projection_in_place(&mut out, system, block, alpha, Execution::Sequential);
    Ok(out)
}

fn projection_in_place(x: &mut [f64], system: &LinearSystem, block: &[usize], alpha: f64, exec: Execution) {
    let r = block_residuals(system, x, block, exec);
    let step = Pseudoinverse::new(&system.a().select_rows(block)).solve(&r);
    for (xj, sj) in x.iter_mut().zip(&step) {
        *xj -= alpha * sj;
    }
}

fn block_residuals(system: &LinearSystem, x: &[f64], block: &[usize], exec: Execution) -> Vec<f64> {
    let (a, b) = (system.a(), system.b());
    let exec = if block.len() * x.len() >= PAR_ROW_WORK { exec } else { Execution::Sequential };
    map_indexed(block.len(), exec, |t| {
        let i = block[t];
        dot(a.row(i), x) - b[i]
    })
}

/// A validated configuration bound to a system, shared by every trial.
pub(crate) struct Prepared<'a> {
    pub(crate) config: &'a SolverConfig,
    pub(crate) system: &'a LinearSystem,
    norms_sq: Vec<f64>,
    constant_alpha: Option<f64>,
    schedule: Option<ChebyshevSchedule>,
    pub(crate) pinv: Option<Pseudoinverse>,
    pub(crate) tol: f64,
    pub(crate) x0: Vec<f64>,
    exec: Execution,
}

/// What a single update did.
pub(crate) struct StepOutcome {
    pub(crate) alpha: AlphaUsed,
    pub(crate) adaptive_l: Option<f64>,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(config: &'a SolverConfig, system: &'a LinearSystem, exec: Execution) -> Result<Self> {
        let (m, n) = (system.rows(), system.cols());
        if config.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Some(tol) = config.residual_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidParameter(format!("residual_tol must be nonnegative, got {tol}")));
            }
        }
        if config.sampling.rows() != m {
            return Err(Error::DimensionMismatch(format!(
                "sampling spec covers {} rows but the system has {m}",
                config.sampling.rows()
            )));
        }
        let x0 = match &config.x0 {
            Some(x) if x.len() != n => {
                return Err(Error::DimensionMismatch(format!("x0 has length {} but the system has {n} columns", x.len())))
            }
            Some(x) => x.clone(),
            None => vec![0.0; n],
        };
        config.weights.validate(m)?;
        config.stepsize.validate()?;
        let norms_sq = system.a().row_norms_sq();
        if let Some(i) = norms_sq.iter().position(|&s| s < ZERO_ROW_TOL * ZERO_ROW_TOL) {
            return Err(Error::ZeroRow(i));
        }

        match config.method {
            Method::Basic if config.sampling.fixed_block_size() != Some(1) => {
                return Err(Error::ConfigMismatch("basic Kaczmarz needs single-row blocks".into()));
            }
            Method::BlockProjection if !matches!(config.stepsize, StepsizePolicy::ClassicConstant { .. }) => {
                return Err(Error::ConfigMismatch("block projection uses a classic constant stepsize".into()));
            }
            _ => {}
        }

        let constant_alpha = match &config.stepsize {
            StepsizePolicy::ClassicConstant { alpha } => Some(*alpha),
            StepsizePolicy::ExtrapolatedConstant { delta, lambda_max_block } => {
                let bounds = if config.method == Method::Basic {
                    crate::stepsize::WeightBounds::uniform(1)
                } else {
                    config.weights.bounds(&config.sampling, &norms_sq)?
                };
                Some(constant_extrapolated_alpha(bounds, *lambda_max_block, *delta)?)
            }
            _ => None,
        };

        let schedule = match config.stepsize.horizon() {
            Some(horizon) => {
                check_chebyshev(config, system, horizon)?;
                config.stepsize.schedule(m)?
            }
            None => None,
        };

        let pinv = if config.diagnostics || system.planted_solution().is_none() {
            let pinv = Pseudoinverse::new(system.a());
            if system.planted_solution().is_none() {
                pinv.check_consistent(system)?;
            }
            Some(pinv)
        } else {
            None
        };
        let tol = config.residual_tol.unwrap_or_else(|| 1e-8 * (1.0 + norm(system.b())));
        Ok(Self { config, system, norms_sq, constant_alpha, schedule, pinv, tol, x0, exec })
    }

    /// Performs update `k → k+1` in place.
    pub(crate) fn step(&self, k: usize, x: &mut [f64], block: &[usize]) -> StepOutcome {
        let a = self.system.a();
        if self.config.method == Method::BlockProjection {
            let alpha = self.constant_alpha.expect("validated");
            projection_in_place(x, self.system, block, alpha, self.exec);
            return StepOutcome { alpha: AlphaUsed::Step(alpha), adaptive_l: None };
        }
        let r = block_residuals(self.system, x, block, self.exec);
        let norms: Vec<f64> = block.iter().map(|&i| self.norms_sq[i]).collect();
        let weights = match self.config.method {
            Method::Basic => vec![1.0],
            _ => self.config.weights.realize(block, &self.norms_sq),
        };
        let (d, weighted_sq) = averaged_direction(block.iter().map(|&i| a.row(i)), &r, &weights, &norms, x.len());
        let (alpha, adaptive_l) = match &self.config.stepsize {
            StepsizePolicy::Adaptive { delta } => match adaptive_from_direction(&d, weighted_sq, &r, *delta) {
                AdaptiveStep::Step { alpha, l } => (alpha, Some(l)),
                AdaptiveStep::Skip => return StepOutcome { alpha: AlphaUsed::Skip, adaptive_l: None },
            },
            _ => match &self.schedule {
                Some(s) => (s.alphas[k], None),
                None => (self.constant_alpha.expect("validated"), None),
            },
        };
        if self.config.method == Method::Basic {
            let i = block[0];
            basic_in_place(x, a.row(i), self.system.b()[i], self.norms_sq[i], alpha);
        } else {
            for (xj, dj) in x.iter_mut().zip(&d) {
                *xj -= alpha * dj;
            }
        }
        StepOutcome { alpha: AlphaUsed::Step(alpha), adaptive_l }
    }

    pub(crate) fn dist_sq(&self, x: &[f64]) -> Option<f64> {
        self.pinv.as_ref().map(|p| p.dist_sq(self.system, x))
    }
}

fn check_chebyshev(config: &SolverConfig, system: &LinearSystem, horizon: usize) -> Result<()> {
    if config.max_iters > horizon {
        return Err(Error::ConfigMismatch(format!(
            "max_iters {} exceeds the Chebyshev horizon {horizon}",
            config.max_iters
        )));
    }
    if config.weights != WeightScheme::Uniform && config.method != Method::Basic {
        return Err(Error::ConfigMismatch("Chebyshev schedules need uniform weights".into()));
    }
    if !system.rows_are_unit() {
        return Err(Error::ConfigMismatch("Chebyshev schedules need a row-normalized system".into()));
    }
    let Some(tau) = config.sampling.fixed_block_size() else {
        return Err(Error::ConfigMismatch("Chebyshev schedules need equal-size blocks".into()));
    };
    let m = system.rows();
    let target = tau as f64 / m as f64;
    if membership_probabilities(&config.sampling).iter().any(|p| (p - target).abs() > 1e-12) {
        return Err(Error::ConfigMismatch("Chebyshev schedules need p_i = tau/m for every row".into()));
    }
    if let StepsizePolicy::ChebyshevPd { .. } = config.stepsize {
        let singular = system.cols() < m || sym_eigenvalues(&system.a().gram_rows())?.rank_estimate < m;
        if singular {
            return Err(Error::ConfigMismatch(
                "Chebyshev-PD requires lambda_min(AA^T) > 0 but the system is rank deficient".into(),
            ));
        }
    }
    Ok(())
}

/// Per-iterate view handed to observers.
pub(crate) struct Observation<'s> {
    pub(crate) k: usize,
    pub(crate) block: &'s [usize],
    pub(crate) step: &'s StepOutcome,
    pub(crate) x: &'s [f64],
    pub(crate) residual: &'s [f64],
    pub(crate) residual_norm: f64,
}

/// When a run stops before `max_iters`.
#[derive(Clone, Copy)]
pub(crate) struct StopRule {
    pub(crate) on_tolerance: bool,
    pub(crate) on_stall: bool,
}

/// Runs the recurrence from `x⁰`, calling `observe` on `x⁰` and on every iterate.
pub(crate) fn drive<F>(prep: &Prepared<'_>, rng: &mut Rng, stop: StopRule, mut observe: F) -> (TerminalStatus, Vec<f64>)
where
    F: FnMut(&Observation<'_>),
{
    let mut x = prep.x0.clone();
    let initial = StepOutcome { alpha: AlphaUsed::Initial, adaptive_l: None };
    let residual = prep.system.residual(&x);
    let residual_norm = norm(&residual);
    observe(&Observation { k: 0, block: &[], step: &initial, x: &x, residual: &residual, residual_norm });
    if stop.on_tolerance && residual_norm <= prep.tol {
        return (TerminalStatus::Converged, x);
    }
    let mut skips = 0;
    for k in 0..prep.config.max_iters {
        let block = sample_block(&prep.config.sampling, rng);
        let outcome = prep.step(k, &mut x, &block);
        skips = if outcome.alpha == AlphaUsed::Skip { skips + 1 } else { 0 };
        let residual = prep.system.residual(&x);
        let residual_norm = norm(&residual);
        observe(&Observation { k: k + 1, block: &block, step: &outcome, x: &x, residual: &residual, residual_norm });
        if stop.on_tolerance && residual_norm <= prep.tol {
            return (TerminalStatus::Converged, x);
        }
        if stop.on_stall && skips >= STALL_LIMIT {
            return (TerminalStatus::Stalled, x);
        }
    }
    (TerminalStatus::MaxIters, x)
}

/// Runs one seeded solve and records every iterate.
pub fn run_solver(config: &SolverConfig, system: &LinearSystem) -> Result<SolverTrace> {
    let prep = Prepared::new(config, system, Execution::default())?;
    let mut rng = rng::from_seed(config.seed);
    let mut events = Vec::new();
    let full = config.trace_level == TraceLevel::FullIterates;
    let stop = StopRule { on_tolerance: true, on_stall: true };
    let (status, final_iterate) = drive(&prep, &mut rng, stop, |obs| {
        events.push(IterationEvent {
            k: obs.k,
            block: obs.block.to_vec(),
            alpha_used: obs.step.alpha,
            adaptive_l: obs.step.adaptive_l,
            residual_norm: obs.residual_norm,
            dist_sq: prep.dist_sq(obs.x),
            iterate: full.then(|| obs.x.to_vec()),
        });
    });
    Ok(SolverTrace { config: config.clone(), residual_tol: prep.tol, events, status, final_iterate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn system(rows: &[Vec<f64>], b: Vec<f64>) -> LinearSystem {
        LinearSystem::new(DenseMatrix::from_rows(rows).unwrap(), b).unwrap()
    }

    #[test]
    fn basic_step_examples() {
        assert_eq!(basic_kaczmarz_step(&[0.0, 0.0], &[1.0, 0.0], 1.0, 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(basic_kaczmarz_step(&[1.0, 7.0], &[1.0, 0.0], 1.0, 1.0).unwrap(), vec![1.0, 7.0]);
        assert_eq!(basic_kaczmarz_step(&[0.0, 0.0], &[1.0, 0.0], 1.0, 2.0).unwrap(), vec![2.0, 0.0]);
        assert!(matches!(basic_kaczmarz_step(&[0.0], &[0.0], 1.0, 1.0), Err(Error::ZeroRow(_))));
    }

    #[test]
    fn rbk_orthonormal_block_solves_in_one_step() {
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]);
        let x = rbk_step(&[0.0, 0.0], &s, &[0, 1], &[0.5, 0.5], 2.0).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn block_projection_examples() {
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0, 3.0]);
        let x = block_projection_step(&[0.0, 0.0], &s, &[0, 1], 1.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert_eq!(block_projection_step(&[1.0, 2.0], &s, &[0, 1], 1.0).unwrap(), vec![1.0, 2.0]);
        let single = block_projection_step(&[0.3, -0.2], &s, &[2], 1.0).unwrap();
        let basic = basic_kaczmarz_step(&[0.3, -0.2], s.a().row(2), 3.0, 1.0).unwrap();
        assert!(single.iter().zip(&basic).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn orthogonal_full_batch_chebyshev_one_step() {
        let s = system(&[vec![0.6, 0.8], vec![-0.8, 0.6]], vec![1.0, -1.0]);
        let cfg = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::full_batch(2).unwrap(),
            StepsizePolicy::ChebyshevPd { horizon: 1, lambda_min: 1.0, lambda_max: 1.0, kappa: Default::default() },
            1,
        );
        let trace = run_solver(&cfg, &s).unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        assert_eq!(trace.iterations(), 1);
    }

    #[test]
    fn start_on_solution_converges_immediately() {
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]);
        let cfg = SolverConfig::new(
            Method::Basic,
            SamplingSpec::uniform_subset(2, 1).unwrap(),
            StepsizePolicy::ClassicConstant { alpha: 1.0 },
            10,
        )
        .with_x0(vec![1.0, 2.0]);
        let trace = run_solver(&cfg, &s).unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].alpha_used, AlphaUsed::Initial);
    }

    #[test]
    fn config_validation() {
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]);
        let basic_wide = SolverConfig::new(
            Method::Basic,
            SamplingSpec::uniform_subset(2, 2).unwrap(),
            StepsizePolicy::ClassicConstant { alpha: 1.0 },
            5,
        );
        assert!(matches!(run_solver(&basic_wide, &s), Err(Error::ConfigMismatch(_))));
        let long_cheb = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::full_batch(2).unwrap(),
            StepsizePolicy::ChebyshevPd { horizon: 3, lambda_min: 1.0, lambda_max: 1.0, kappa: Default::default() },
            4,
        );
        assert!(matches!(run_solver(&long_cheb, &s), Err(Error::ConfigMismatch(_))));
        let inconsistent = system(&[vec![1.0, 0.0], vec![1.0, 0.0]], vec![1.0, 2.0]);
        let cfg = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::uniform_subset(2, 1).unwrap(),
            StepsizePolicy::ClassicConstant { alpha: 1.0 },
            5,
        );
        assert!(matches!(run_solver(&cfg, &inconsistent), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn chebyshev_pd_rejects_singular_system() {
        let s = system(&[vec![1.0, 0.0], vec![1.0, 0.0]], vec![1.0, 1.0]);
        let cfg = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::full_batch(2).unwrap(),
            StepsizePolicy::ChebyshevPd { horizon: 3, lambda_min: 1.0, lambda_max: 2.0, kappa: Default::default() },
            3,
        );
        assert!(matches!(run_solver(&cfg, &s), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn adaptive_skips_until_stalled() {
        // only the already-satisfied row is ever drawn
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]);
        let spec = SamplingSpec::partition(vec![vec![0], vec![1]], vec![1.0, 0.0]).unwrap();
        let cfg = SolverConfig::new(Method::Rbk, spec, StepsizePolicy::Adaptive { delta: 1.0 }, 500)
            .with_x0(vec![1.0, 3.0]);
        let trace = run_solver(&cfg, &s).unwrap();
        assert_eq!(trace.status, TerminalStatus::Stalled);
        assert_eq!(trace.iterations(), STALL_LIMIT);
        assert!(trace.events[1..].iter().all(|e| e.alpha_used == AlphaUsed::Skip));
    }

    #[test]
    fn trace_csv_and_json_round_trip() {
        let s = system(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]], vec![1.0, 2.0, 2.2]);
        let cfg = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::uniform_subset(3, 2).unwrap(),
            StepsizePolicy::Adaptive { delta: 1.0 },
            20,
        )
        .with_seed(5)
        .with_trace_level(TraceLevel::FullIterates);
        let trace = run_solver(&cfg, &s).unwrap();
        let csv = trace.to_csv();
        assert!(csv.starts_with("k,block_size,alpha,residual_norm,dist_sq\n"));
        assert_eq!(csv.lines().count(), trace.events.len() + 1);
        let back: SolverTrace = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
        assert_eq!(back, trace);
    }
}
