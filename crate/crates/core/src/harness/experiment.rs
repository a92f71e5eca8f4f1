use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::choice::{AutoConfig, DEFAULT_LAMBDA_BUDGET};
use super::recipe::{generate_problem, ProblemRecipe};
use crate::analysis::{block_lambda_max, build_w};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_sq, sym_eigenvalues, LinearSystem};
use crate::par::Execution;
use crate::sampling::membership_probabilities;
use crate::solver::{run_monte_carlo_with, Method, MonteCarloSummary, SolverConfig};
use crate::stepsize::StepsizePolicy;

/// One configuration of a plan: either fully specified or resolved against the generated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanEntry {
    Auto(AutoConfig),
    Explicit {
        #[serde(default)]
        label: Option<String>,
        #[serde(flatten)]
        config: SolverConfig,
    },
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PlanOutputs {
    /// Directory receiving `<label>.csv` and `summary.json`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub recipe: ProblemRecipe,
    pub configs: Vec<PlanEntry>,
    pub trials: usize,
    /// Relative reduction of the mean squared distance that counts as solved.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Index of the configuration speedups are measured against.
    #[serde(default)]
    pub baseline: usize,
    #[serde(default)]
    pub outputs: PlanOutputs,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() {
            return Err(Error::InvalidParameter("experiment plan has no configs".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("experiment plan needs at least one trial".into()));
        }
        if self.baseline >= self.configs.len() {
            return Err(Error::InvalidParameter(format!("baseline index {} out of range", self.baseline)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub empirical_mean_dist_sq: f64,
    pub stderr: f64,
    pub theory_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigOutcome {
    pub label: String,
    pub config: SolverConfig,
    /// Per-iteration contraction factor of the matching theorem, when one applies.
    pub rate_factor: Option<f64>,
    pub lambda_max_block: f64,
    /// `τ / λ_max^block` for fixed-size blocks.
    pub theory_speedup: Option<f64>,
    /// Iterations where the mean exceeds the bound by more than three standard errors.
    pub violations: usize,
    /// First `k` with mean distance² below `tolerance · initial`.
    pub iterations_to_tolerance: Option<usize>,
    pub speedup_vs_baseline: Option<f64>,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
}

impl ConfigOutcome {
    /// `k,empirical_mean_dist_sq,stderr,theory_bound`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,empirical_mean_dist_sq,stderr,theory_bound\n");
        for p in &self.curve {
            let bound = p.theory_bound.map(|b| format!("{b:e}")).unwrap_or_default();
            writeln!(out, "{},{:e},{:e},{}", p.k, p.empirical_mean_dist_sq, p.stderr, bound).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub recipe: ProblemRecipe,
    pub trials: usize,
    pub tolerance: f64,
    pub baseline: usize,
    pub configs: Vec<ConfigOutcome>,
}

impl ExperimentReport {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes one CSV per configuration and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for c in &self.configs {
            let path = dir.join(format!("{}.csv", c.label));
            fs::write(&path, c.to_csv())?;
            written.push(path);
        }
        let path = dir.join("summary.json");
        fs::write(&path, self.summary_json()?)?;
        written.push(path);
        Ok(written)
    }
}

/// Contraction factor of `E‖x^k − x_k^*‖²` predicted for `config`, if a theorem covers it.
pub fn theory_factor(config: &SolverConfig, system: &LinearSystem, lambda_block: f64) -> Result<Option<f64>> {
    let policy = &config.stepsize;
    if config.method == Method::BlockProjection || policy.horizon().is_some() {
        return Ok(None);
    }
    let single_row = config.sampling.fixed_block_size() == Some(1);
    if single_row {
        // one row per step: Frobenius-proportional sampling is uniform on unit rows
        let m = system.rows() as f64;
        let uniform = membership_probabilities(&config.sampling).iter().all(|p| (p - 1.0 / m).abs() < 1e-12);
        if !system.rows_are_unit() || !uniform {
            return Ok(None);
        }
        let alpha = match *policy {
            StepsizePolicy::ClassicConstant { alpha } => alpha,
            StepsizePolicy::ExtrapolatedConstant { delta, lambda_max_block } => (2.0 - delta) / lambda_max_block,
            StepsizePolicy::Adaptive { delta } => 2.0 - delta,
            _ => return Ok(None),
        };
        let lnz = sym_eigenvalues(&system.a().gram_cols())?.lambda_min_nz;
        return Ok(Some((1.0 - alpha * (2.0 - alpha) * lnz / system.a().frobenius_sq()).max(0.0)));
    }
    let norms = system.a().row_norms_sq();
    let bounds = config.weights.bounds(&config.sampling, &norms)?;
    let lw = sym_eigenvalues(&build_w(system, &config.sampling)?)?.lambda_min_nz;
    let (wmin, wmax) = (bounds.omega_min, bounds.omega_max);
    let factor = match *policy {
        StepsizePolicy::ExtrapolatedConstant { delta, lambda_max_block } => {
            1.0 - (2.0 - delta) * wmin * wmin * lw / (wmax * wmax * lambda_max_block)
        }
        StepsizePolicy::Adaptive { delta } => 1.0 - delta * (2.0 - delta) * wmin * lw / (wmax * lambda_block),
        _ => return Ok(None),
    };
    Ok(Some(factor.max(0.0)))
}

fn first_below(summary: &MonteCarloSummary, tolerance: f64) -> Option<usize> {
    let target = tolerance * summary.mean_dist_sq[0];
    summary.mean_dist_sq.iter().position(|&d| d <= target)
}

/// Generates the system, runs every configuration and compares against theory.
pub fn run_experiment(plan: &ExperimentPlan, exec: Execution) -> Result<ExperimentReport> {
    plan.validate()?;
    let system = generate_problem(&plan.recipe)?;
    let mut outcomes = Vec::with_capacity(plan.configs.len());
    for (i, entry) in plan.configs.iter().enumerate() {
        let (label, config, budget) = match entry {
            PlanEntry::Auto(auto) => (auto.label.clone(), auto.resolve(&system, plan.recipe.seed)?, auto.lambda_budget),
            PlanEntry::Explicit { label, config } => (label.clone(), config.clone(), DEFAULT_LAMBDA_BUDGET),
        };
        let label = label.unwrap_or_else(|| format!("config{i}"));
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(Error::InvalidParameter(format!("label {label:?} is not a plain file name")));
        }
        let lambda_block = block_lambda_max(&system, &config.sampling, budget, config.seed)?.value;
        let summary = run_monte_carlo_with(&config, &system, plan.trials, exec)?;
        let factor = theory_factor(&config, &system, lambda_block)?;
        let mut bound = factor.map(|_| summary.mean_dist_sq[0]);
        let mut curve = Vec::with_capacity(summary.mean_dist_sq.len());
        let mut violations = 0;
        for k in 0..summary.mean_dist_sq.len() {
            if k > 0 {
                bound = bound.zip(factor).map(|(b, f)| f * b);
            }
            let (mean, se) = (summary.mean_dist_sq[k], summary.stderr_dist_sq[k]);
            if bound.is_some_and(|b| mean > b + 3.0 * se) {
                violations += 1;
            }
            curve.push(CurvePoint { k, empirical_mean_dist_sq: mean, stderr: se, theory_bound: bound });
        }
        let theory_speedup = config.sampling.fixed_block_size().map(|t| t as f64 / lambda_block);
        outcomes.push(ConfigOutcome {
            label,
            iterations_to_tolerance: first_below(&summary, plan.tolerance),
            config,
            rate_factor: factor,
            lambda_max_block: lambda_block,
            theory_speedup,
            violations,
            speedup_vs_baseline: None,
            curve,
        });
    }
    let base = outcomes[plan.baseline].iterations_to_tolerance;
    for o in &mut outcomes {
        o.speedup_vs_baseline = base.zip(o.iterations_to_tolerance).map(|(b, it)| b as f64 / it.max(1) as f64);
    }
    Ok(ExperimentReport {
        recipe: plan.recipe,
        trials: plan.trials,
        tolerance: plan.tolerance,
        baseline: plan.baseline,
        configs: outcomes,
    })
}

/// `‖A‖²` of a generated recipe, used to size pavings.
pub fn recipe_spectral_sq(recipe: &ProblemRecipe) -> Result<f64> {
    Ok(spectral_norm_sq(generate_problem(recipe)?.a()))
}
