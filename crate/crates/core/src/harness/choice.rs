use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::block_lambda_max;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_sq, sym_eigenvalues, LinearSystem};
use crate::sampling::{Paving, SamplingSpec};
use crate::solver::{Method, SolverConfig, TraceLevel};
use crate::stepsize::{Kappa, StepsizePolicy, WeightScheme};

/// Supports sampled when `λ_max^block` cannot be enumerated.
pub const DEFAULT_LAMBDA_BUDGET: usize = 2000;

/// Sampling written as `uniform:T`, `partition:L`, `partition-frob:L`, `aligned:B` or `full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SamplingChoice {
    Uniform(usize),
    /// Random paving into `L` blocks, each drawn with probability `1/L`.
    Paving(usize),
    /// Random paving with probabilities `‖A_J‖_F² / ‖A‖_F²`.
    PavingFrobenius(usize),
    /// Consecutive rows in blocks of `B`.
    Aligned(usize),
    Full,
}

impl FromStr for SamplingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("sampling {s:?}; expected uniform:T, partition:L, partition-frob:L, aligned:B or full"));
        if s == "full" {
            return Ok(SamplingChoice::Full);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let v: usize = arg.parse().map_err(|_| bad())?;
        match kind {
            "uniform" => Ok(SamplingChoice::Uniform(v)),
            "partition" => Ok(SamplingChoice::Paving(v)),
            "partition-frob" => Ok(SamplingChoice::PavingFrobenius(v)),
            "aligned" => Ok(SamplingChoice::Aligned(v)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SamplingChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SamplingChoice> for String {
    fn from(c: SamplingChoice) -> String {
        c.to_string()
    }
}

impl fmt::Display for SamplingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingChoice::Uniform(t) => write!(f, "uniform:{t}"),
            SamplingChoice::Paving(l) => write!(f, "partition:{l}"),
            SamplingChoice::PavingFrobenius(l) => write!(f, "partition-frob:{l}"),
            SamplingChoice::Aligned(b) => write!(f, "aligned:{b}"),
            SamplingChoice::Full => f.write_str("full"),
        }
    }
}

impl SamplingChoice {
    /// Instantiates the spec for `m` rows; pavings are drawn from `seed`.
    pub fn build(&self, system: &LinearSystem, seed: u64) -> Result<SamplingSpec> {
        let m = system.rows();
        match *self {
            SamplingChoice::Uniform(t) => SamplingSpec::uniform_subset(m, t),
            SamplingChoice::Paving(l) => SamplingSpec::from_paving(&Paving::random(seed, m, l)?),
            SamplingChoice::PavingFrobenius(l) => {
                SamplingSpec::partition_frobenius(Paving::random(seed, m, l)?.blocks, system.a())
            }
            SamplingChoice::Aligned(b) => SamplingSpec::aligned(m, b),
            SamplingChoice::Full => SamplingSpec::full_batch(m),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Stepsize family; spectral parameters are filled in from the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepsizeChoice {
    Classic {
        #[serde(default = "one")]
        alpha: f64,
    },
    ConstantExtrapolated {
        #[serde(default = "one")]
        delta: f64,
    },
    Adaptive {
        #[serde(default = "one")]
        delta: f64,
    },
    ChebyshevPd {
        #[serde(default)]
        kappa: Kappa,
    },
    ChebyshevSingular {
        #[serde(default)]
        kappa: Kappa,
    },
}

impl StepsizeChoice {
    /// Parses the CLI names `classic`, `constant-extrapolated`, `adaptive`, `chebyshev-pd`, `chebyshev-singular`.
    pub fn from_name(name: &str, alpha: f64, delta: f64, kappa: Kappa) -> Result<Self> {
        Ok(match name {
            "classic" => StepsizeChoice::Classic { alpha },
            "constant-extrapolated" => StepsizeChoice::ConstantExtrapolated { delta },
            "adaptive" => StepsizeChoice::Adaptive { delta },
            "chebyshev-pd" => StepsizeChoice::ChebyshevPd { kappa },
            "chebyshev-singular" => StepsizeChoice::ChebyshevSingular { kappa },
            other => return Err(Error::Parse(format!("unknown stepsize {other:?}"))),
        })
    }
}

fn default_budget() -> usize {
    DEFAULT_LAMBDA_BUDGET
}

/// A solver configuration whose sampling and stepsize are resolved against the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub method: Method,
    pub sampling: SamplingChoice,
    #[serde(default)]
    pub weights: WeightScheme,
    pub stepsize: StepsizeChoice,
    pub max_iters: usize,
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_budget")]
    pub lambda_budget: usize,
}

impl AutoConfig {
    pub fn new(method: Method, sampling: SamplingChoice, stepsize: StepsizeChoice, max_iters: usize) -> Self {
        Self {
            label: None,
            method,
            sampling,
            weights: WeightScheme::Uniform,
            stepsize,
            max_iters,
            residual_tol: None,
            seed: None,
            lambda_budget: DEFAULT_LAMBDA_BUDGET,
        }
    }

    /// Builds the concrete configuration; `default_seed` applies when no seed is set.
    pub fn resolve(&self, system: &LinearSystem, default_seed: u64) -> Result<SolverConfig> {
        let seed = self.seed.unwrap_or(default_seed);
        let sampling = self.sampling.build(system, seed)?;
        let stepsize = match &self.stepsize {
            StepsizeChoice::Classic { alpha } => StepsizePolicy::ClassicConstant { alpha: *alpha },
            StepsizeChoice::ConstantExtrapolated { delta } => {
                let lambda = block_lambda_max(system, &sampling, self.lambda_budget, seed)?;
                StepsizePolicy::ExtrapolatedConstant { delta: *delta, lambda_max_block: lambda.value }
            }
            StepsizeChoice::Adaptive { delta } => StepsizePolicy::Adaptive { delta: *delta },
            StepsizeChoice::ChebyshevPd { kappa } => {
                let spec = sym_eigenvalues(&system.a().gram_rows())?;
                StepsizePolicy::ChebyshevPd {
                    horizon: self.max_iters,
                    lambda_min: spec.lambda_min.max(0.0),
                    lambda_max: spec.lambda_max,
                    kappa: kappa.clone(),
                }
            }
            StepsizeChoice::ChebyshevSingular { kappa } => StepsizePolicy::ChebyshevSingular {
                horizon: self.max_iters,
                lambda_max: spectral_norm_sq(system.a()),
                kappa: kappa.clone(),
            },
        };
        Ok(SolverConfig {
            method: self.method,
            sampling,
            weights: self.weights.clone(),
            stepsize,
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            seed,
            trace_level: TraceLevel::NormsOnly,
            diagnostics: true,
            x0: None,
        })
    }
}
