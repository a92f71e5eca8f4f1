use serde::{Deserialize, Serialize};

use super::{drive, Method, Prepared, SolverConfig, StopRule};
use crate::error::{Error, Result};
use crate::linalg::{norm, LinearSystem};
use crate::par::{map_indexed, Execution};
use crate::rng;
use crate::sampling::enumerate_supports;

/// Trials folded sequentially before chunks are merged.
const CHUNK: usize = 32;

/// Per-iteration sample statistics over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    /// Index `k` holds statistics of `x^k`, `k = 0..=max_iters`.
    pub mean_dist_sq: Vec<f64>,
    pub stderr_dist_sq: Vec<f64>,
    pub mean_iterate: Vec<Vec<f64>>,
    pub stderr_iterate: Vec<Vec<f64>>,
    /// Mean of `A x^k − b`.
    pub mean_residual: Vec<Vec<f64>>,
    pub stderr_residual: Vec<Vec<f64>>,
}

impl MonteCarloSummary {
    pub fn iterations(&self) -> usize {
        self.mean_dist_sq.len() - 1
    }

    /// `‖mean(A x^k − b)‖`
    pub fn mean_residual_norm(&self, k: usize) -> f64 {
        norm(&self.mean_residual[k])
    }

    /// Euclidean norm of the componentwise standard errors of `mean(A x^k − b)`.
    pub fn residual_aggregate_stderr(&self, k: usize) -> f64 {
        norm(&self.stderr_residual[k])
    }

    /// `‖mean(x^k) − x*‖`
    pub fn mean_error_norm(&self, k: usize, x_star: &[f64]) -> f64 {
        self.mean_iterate[k].iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn iterate_aggregate_stderr(&self, k: usize) -> f64 {
        norm(&self.stderr_iterate[k])
    }
}

/// Welford accumulator over fixed-length vectors.
#[derive(Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mu, m2), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(sample) {
            let delta = v - *mu;
            *mu += delta / n;
            *m2 += delta * (v - *mu);
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    fn stderr(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|m2| (m2.max(0.0) / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Layout of one trial's trajectory: per `k`, `[dist_sq, x (n), r (m)]`.
struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn stride(&self) -> usize {
        1 + self.n + self.m
    }
}

/// [`run_monte_carlo_with`] on the default execution.
pub fn run_monte_carlo(config: &SolverConfig, system: &LinearSystem, trials: usize) -> Result<MonteCarloSummary> {
    run_monte_carlo_with(config, system, trials, Execution::default())
}

/// Runs `trials` independent solves, trial `t` seeded with `split(seed, t)`.
///
/// Every trial runs the full `max_iters` updates. Trials are folded in fixed
/// chunks and chunks are merged in order, so the summary does not depend on
/// `exec` or the thread count.
pub fn run_monte_carlo_with(
    config: &SolverConfig,
    system: &LinearSystem,
    trials: usize,
    exec: Execution,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let mut config = config.clone();
    config.diagnostics = true;
    let prep = Prepared::new(&config, system, Execution::Sequential)?;
    let layout = Layout { n: system.cols(), m: system.rows() };
    let steps = config.max_iters + 1;
    let width = steps * layout.stride();
    let stop = StopRule { on_tolerance: false, on_stall: false };

    let chunks = trials.div_ceil(CHUNK);
    let partials = map_indexed(chunks, exec, |c| {
        let mut acc = Moments::new(width);
        let mut row = vec![0.0; width];
        for t in (c * CHUNK)..((c + 1) * CHUNK).min(trials) {
            let mut rng = rng::split(config.seed, t as u64);
            drive(&prep, &mut rng, stop, |obs| {
                let base = obs.k * layout.stride();
                row[base] = prep.dist_sq(obs.x).expect("diagnostics enabled");
                row[base + 1..base + 1 + layout.n].copy_from_slice(obs.x);
                row[base + 1 + layout.n..base + layout.stride()].copy_from_slice(obs.residual);
            });
            acc.push(&row);
        }
        acc
    });
    let mut total = Moments::new(width);
    for p in &partials {
        total.merge(p);
    }
    let se = total.stderr();

    let split = |v: &[f64], k: usize| {
        let base = k * layout.stride();
        (v[base], v[base + 1..base + 1 + layout.n].to_vec(), v[base + 1 + layout.n..base + layout.stride()].to_vec())
    };
    let mut summary = MonteCarloSummary {
        trials,
        mean_dist_sq: Vec::with_capacity(steps),
        stderr_dist_sq: Vec::with_capacity(steps),
        mean_iterate: Vec::with_capacity(steps),
        stderr_iterate: Vec::with_capacity(steps),
        mean_residual: Vec::with_capacity(steps),
        stderr_residual: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let (d, x, r) = split(&total.mean, k);
        let (sd, sx, sr) = split(&se, k);
        summary.mean_dist_sq.push(d);
        summary.stderr_dist_sq.push(sd);
        summary.mean_iterate.push(x);
        summary.stderr_iterate.push(sx);
        summary.mean_residual.push(r);
        summary.stderr_residual.push(sr);
    }
    Ok(summary)
}

/// `E[x¹]` from `x` by summing the first update over every support.
pub fn exact_one_step_expectation(config: &SolverConfig, system: &LinearSystem, x: &[f64]) -> Result<Vec<f64>> {
    let mut config = config.clone();
    config.x0 = Some(x.to_vec());
    config.diagnostics = false;
    if config.method == Method::Basic && config.sampling.fixed_block_size() != Some(1) {
        return Err(Error::ConfigMismatch("basic Kaczmarz needs single-row blocks".into()));
    }
    let prep = Prepared::new(&config, system, Execution::Sequential)?;
    let mut mean = vec![0.0; x.len()];
    for (block, p) in enumerate_supports(&config.sampling)? {
        let mut y = x.to_vec();
        prep.step(0, &mut y, &block);
        for (mj, yj) in mean.iter_mut().zip(&y) {
            *mj += p * yj;
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<Vec<f64>> = (0..37).map(|i| vec![(i as f64).sin(), (i * i) as f64 * 0.01]).collect();
        let mut whole = Moments::new(2);
        data.iter().for_each(|d| whole.push(d));
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        data[..11].iter().for_each(|d| a.push(d));
        data[11..].iter().for_each(|d| b.push(d));
        a.merge(&b);
        for i in 0..2 {
            assert!((a.mean[i] - whole.mean[i]).abs() < 1e-12);
            assert!((a.m2[i] - whole.m2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_samples_have_zero_stderr() {
        let mut m = Moments::new(1);
        for _ in 0..5 {
            m.push(&[0.1]);
        }
        let mut other = Moments::new(1);
        other.push(&[0.1]);
        m.merge(&other);
        assert_eq!(m.stderr(), vec![0.0]);
        assert_eq!(m.mean, vec![0.1]);
    }
}
