use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kaczlab::analysis::{conditioning_report, paving_quality, predict_rates};
use kaczlab::harness::{
    generate_problem, run_experiment, AutoConfig, ExperimentPlan, ProblemRecipe, SamplingChoice, StepsizeChoice,
    DEFAULT_LAMBDA_BUDGET,
};
use kaczlab::io::{read_matrix_market, read_vector};
use kaczlab::linalg::normalize_rows;
use kaczlab::par::Execution;
use kaczlab::sampling::Paving;
use kaczlab::solver::{run_solver, Method, SolverConfig, TerminalStatus, TraceLevel};
use kaczlab::stepsize::{Kappa, WeightScheme};
use kaczlab::LinearSystem;

/// Randomized block Kaczmarz solvers, conditioning analysis and rate experiments.
#[derive(Parser)]
#[command(name = "kaczlab", version)]
struct Cli {
    /// Seed for generated problems, pavings and sampling; overrides seeds in config files.
    #[arg(long, global = true, env = "KACZLAB_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write its trace.
    Solve(SolveArgs),
    /// Report stochastic conditioning and predicted rates.
    Analyze(AnalyzeArgs),
    /// Run a Monte Carlo experiment plan.
    Experiment(ExperimentArgs),
    /// Emit a random row paving as JSON.
    Paving(PavingArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Generated problem: gaussian:MxN, rankdef:MxN:R, coherent:MxN:C or orthoblocks:MxN:B.
    #[arg(long, conflicts_with_all = ["matrix", "rhs"])]
    recipe: Option<String>,
    /// MatrixMarket file holding A.
    #[arg(long, requires = "rhs")]
    matrix: Option<PathBuf>,
    /// Right-hand side, one value per line.
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Scale rows of a loaded system to unit norm (generated systems already are).
    #[arg(long)]
    normalize: bool,
}

impl SystemArgs {
    fn load(&self, seed: u64) -> Result<LinearSystem> {
        if let Some(recipe) = &self.recipe {
            return Ok(generate_problem(&ProblemRecipe::parse(recipe, seed)?)?);
        }
        let (Some(a), Some(b)) = (&self.matrix, &self.rhs) else {
            bail!("give either --recipe or both --matrix and --rhs");
        };
        let a = read_matrix_market(a).with_context(|| format!("reading {}", a.display()))?;
        let b = read_vector(b).with_context(|| format!("reading {}", b.display()))?;
        let system = LinearSystem::new(a, b)?;
        Ok(if self.normalize { normalize_rows(&system)?.0 } else { system })
    }
}

#[derive(Args)]
struct StrategyArgs {
    /// basic, rbk or block-projection.
    #[arg(long, default_value = "rbk", value_parser = parse_method)]
    method: Method,
    /// uniform:T, partition:L, partition-frob:L, aligned:B or full.
    #[arg(long, default_value = "uniform:1")]
    sampling: SamplingChoice,
    /// classic, constant-extrapolated, adaptive, chebyshev-pd or chebyshev-singular.
    #[arg(long, default_value = "constant-extrapolated")]
    stepsize: String,
    /// Stepsize of the classic policy.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Chebyshev root order: identity, leja (numerically stable) or seed:N.
    #[arg(long, default_value = "identity", value_parser = parse_kappa)]
    kappa: Kappa,
    /// uniform or row-norm.
    #[arg(long, default_value = "uniform", value_parser = parse_weights)]
    weights: WeightScheme,
    /// Supports sampled when the block conditioning cannot be enumerated.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Full solver configuration as JSON; replaces the strategy flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Residual tolerance; defaults to 1e-8 (1 + ‖b‖).
    #[arg(long)]
    tol: Option<f64>,
    /// Store every iterate in the JSON trace.
    #[arg(long)]
    full_iterates: bool,
    /// Trace CSV (k, block_size, alpha, residual_norm, dist_sq).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace JSON with the configuration and every event.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// uniform:T, partition:L, partition-frob:L, aligned:B or full.
    #[arg(long, default_value = "uniform:1")]
    sampling: SamplingChoice,
    #[arg(long, default_value = "uniform", value_parser = parse_weights)]
    weights: WeightScheme,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_BUDGET)]
    budget: usize,
    /// Paving JSON to assess against the 6 log(1+m) bound.
    #[arg(long)]
    paving: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan JSON.
    plan: PathBuf,
    /// Output directory; overrides the plan.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct PavingArgs {
    /// Number of rows.
    #[arg(long)]
    rows: usize,
    /// Number of blocks.
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "basic" => Ok(Method::Basic),
        "rbk" => Ok(Method::Rbk),
        "block-projection" => Ok(Method::BlockProjection),
        _ => Err(format!("unknown method {s:?}")),
    }
}

fn parse_kappa(s: &str) -> std::result::Result<Kappa, String> {
    match s.split_once(':') {
        None if s == "identity" => Ok(Kappa::Identity),
        None if s == "leja" => Ok(Kappa::Leja),
        Some(("seed", v)) => v.parse().map(|seed| Kappa::Seeded { seed }).map_err(|e| e.to_string()),
        _ => Err(format!("unknown permutation {s:?}")),
    }
}

fn parse_weights(s: &str) -> std::result::Result<WeightScheme, String> {
    match s {
        "uniform" => Ok(WeightScheme::Uniform),
        "row-norm" => Ok(WeightScheme::RowNormSq),
        _ => Err(format!("unknown weights {s:?}")),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(args: &SolveArgs, seed: Option<u64>) -> Result<TerminalStatus> {
    let system = args.system.load(seed.unwrap_or(0))?;
    let mut config: SolverConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut config: SolverConfig = serde_json::from_str(&text)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config
        }
        None => {
            let s = &args.strategy;
            let mut auto = AutoConfig::new(
                s.method,
                s.sampling,
                StepsizeChoice::from_name(&s.stepsize, s.alpha, s.delta, s.kappa.clone())?,
                args.max_iters,
            );
            auto.weights = s.weights.clone();
            auto.residual_tol = args.tol;
            auto.lambda_budget = s.budget;
            auto.resolve(&system, seed.unwrap_or(0))?
        }
    };
    if args.full_iterates {
        config.trace_level = TraceLevel::FullIterates;
    }
    let trace = run_solver(&config, &system)?;
    if let Some(path) = &args.out {
        write_text(path, &trace.to_csv())?;
    }
    if let Some(path) = &args.json {
        write_text(path, &trace.to_json()?)?;
    }
    let last = trace.events.last().expect("trace has the initial event");
    println!(
        "status: {:?}  iterations: {}  residual: {:e}",
        trace.status,
        trace.iterations(),
        last.residual_norm
    );
    Ok(trace.status)
}

fn analyze(args: &AnalyzeArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let system = args.system.load(seed)?;
    let spec = args.sampling.build(&system, seed)?;
    let report = conditioning_report(&system, &spec, args.budget, seed)?;
    let bounds = args.weights.bounds(&spec, &system.a().row_norms_sq())?;
    let rates = predict_rates(&report, bounds, args.delta, spec.max_block_size())?;
    let paving = match &args.paving {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(paving_quality(&system, &Paving::from_json(&text)?)?)
        }
        None => None,
    };

    println!("rows x cols            {} x {}", report.rows, report.cols);
    println!("sampling               {}", args.sampling);
    println!("lambda_max_block       {:.6}  ({:?})", report.lambda_max_block, report.lambda_max_block_mode);
    println!("lambda_min_nz(W)       {:.6e}", report.lambda_min_nz_w);
    println!("||A||^2                {:.6}", report.spectral_sq);
    println!("||A||_F^2              {:.6}", report.frobenius_sq);
    println!("lambda_min(AA^T)       {:.6e}", report.lambda_min_aat);
    println!("rate basic             {:.6}", rates.rate_basic);
    println!("rate constant          {:.6}", rates.rate_constant_stepsize);
    println!("rate adaptive          {:.6}", rates.rate_adaptive);
    println!("rate paving            {:.6}", rates.rate_paving);
    match rates.cheb_factor {
        Some(f) => println!("chebyshev factor       {f:.6}"),
        None => println!("chebyshev factor       n/a (AA^T singular)"),
    }
    println!("speedup vs basic       {:.3}", rates.speedup_vs_basic);
    println!("diversity ok           {}", rates.diversity_ok);
    if rates.optimistic {
        println!("note                   lambda_max_block is a sampled estimate; rates are optimistic");
    }
    if let Some(q) = &paving {
        println!(
            "paving                 lambda_max_block {:.4}, 6 ln(1+m) = {:.4} -> {}, 6 log2(1+m) = {:.4} -> {}",
            q.lambda_max_block, q.bound, q.satisfied, q.bound_log2, q.satisfied_log2
        );
    }
    if let Some(path) = &args.out {
        let json = serde_json::json!({ "report": report, "rates": rates, "paving": paving });
        write_text(path, &serde_json::to_string_pretty(&json)?)?;
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs, seed: Option<u64>) -> Result<()> {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let mut plan = ExperimentPlan::from_json(&text)?;
    if let Some(seed) = seed {
        plan.recipe.seed = seed;
    }
    let dir = args
        .out_dir
        .clone()
        .or_else(|| plan.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_experiment(&plan, exec)?;
    for path in report.write(&dir)? {
        println!("wrote {}", path.display());
    }
    for c in &report.configs {
        println!(
            "{:<16} violations {:>4}  iterations-to-tol {:>8}  speedup {:>8}",
            c.label,
            c.violations,
            c.iterations_to_tolerance.map_or("-".to_string(), |v| v.to_string()),
            c.speedup_vs_baseline.map_or("-".to_string(), |v| format!("{v:.2}")),
        );
    }
    Ok(())
}

fn paving(args: &PavingArgs, seed: Option<u64>) -> Result<()> {
    let json = Paving::random(seed.unwrap_or(0), args.rows, args.ell)?.to_json();
    match &args.out {
        Some(path) => write_text(path, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args, cli.seed).map(|status| match status {
            TerminalStatus::Converged => ExitCode::SUCCESS,
            TerminalStatus::MaxIters => ExitCode::from(2),
            TerminalStatus::Stalled => ExitCode::from(3),
        }),
        Command::Analyze(args) => analyze(args, cli.seed).map(|_| ExitCode::SUCCESS),
        Command::Experiment(args) => experiment(args, cli.seed).map(|_| ExitCode::SUCCESS),
        Command::Paving(args) => paving(args, cli.seed).map(|_| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
