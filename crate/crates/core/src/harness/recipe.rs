use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, normalize_rows, DenseMatrix, LinearSystem};
use crate::rng::{self, Rng};

/// Shape of a generated test matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeKind {
    GaussianNormalized { m: usize, n: usize },
    /// `A = U Σ Vᵀ` with `rank` nonzero singular values, then row-normalized.
    RankDeficient { m: usize, n: usize, rank: usize },
    /// Rows pulled toward a shared unit vector; `coherence = 1` makes all rows equal.
    CoherentRows { m: usize, n: usize, coherence: f64 },
    /// `m / block_size` stacked blocks, each with orthonormal rows.
    OrthonormalBlocks { m: usize, n: usize, block_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecipe {
    #[serde(flatten)]
    pub kind: RecipeKind,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemRecipe {
    pub fn new(kind: RecipeKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    /// Parses `kind:MxN[:param]`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        Ok(Self { kind: text.parse()?, seed })
    }
}

impl RecipeKind {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            RecipeKind::GaussianNormalized { m, n }
            | RecipeKind::RankDeficient { m, n, .. }
            | RecipeKind::CoherentRows { m, n, .. }
            | RecipeKind::OrthonormalBlocks { m, n, .. } => (m, n),
        }
    }
}

impl FromStr for RecipeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("recipe {s:?}; expected kind:MxN[:param]"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 {
            return Err(bad());
        }
        let (m, n) = parts[1].split_once(['x', 'X']).ok_or_else(bad)?;
        let m: usize = m.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let param = parts.get(2).copied();
        let kind = match (parts[0], param, parts.len()) {
            ("gaussian", None, 2) => RecipeKind::GaussianNormalized { m, n },
            ("rankdef", Some(p), 3) => RecipeKind::RankDeficient { m, n, rank: p.parse().map_err(|_| bad())? },
            ("coherent", Some(p), 3) => RecipeKind::CoherentRows { m, n, coherence: p.parse().map_err(|_| bad())? },
            ("orthoblocks", Some(p), 3) => {
                RecipeKind::OrthonormalBlocks { m, n, block_size: p.parse().map_err(|_| bad())? }
            }
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

impl fmt::Display for RecipeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RecipeKind::GaussianNormalized { m, n } => write!(f, "gaussian:{m}x{n}"),
            RecipeKind::RankDeficient { m, n, rank } => write!(f, "rankdef:{m}x{n}:{rank}"),
            RecipeKind::CoherentRows { m, n, coherence } => write!(f, "coherent:{m}x{n}:{coherence}"),
            RecipeKind::OrthonormalBlocks { m, n, block_size } => write!(f, "orthoblocks:{m}x{n}:{block_size}"),
        }
    }
}

fn gaussian(rng: &mut Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Orthonormalizes `k` Gaussian vectors in `R^len` (Gram–Schmidt, applied twice).
fn orthonormal_columns(rng: &mut Rng, len: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian(rng, len);
        for _ in 0..2 {
            for q in &basis {
                let c = crate::linalg::dot(q, &v);
                crate::linalg::axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    basis
}

fn validate(kind: &RecipeKind) -> Result<()> {
    let (m, n) = kind.dims();
    if m == 0 || n == 0 {
        return Err(Error::BadDimensions(format!("{m}x{n}")));
    }
    match *kind {
        RecipeKind::RankDeficient { rank, .. } if rank == 0 || rank > m.min(n) => {
            Err(Error::BadDimensions(format!("rank {rank} for a {m}x{n} matrix")))
        }
        RecipeKind::CoherentRows { coherence, .. } if !(0.0..=1.0).contains(&coherence) => {
            Err(Error::BadDimensions(format!("coherence {coherence} outside [0, 1]")))
        }
        RecipeKind::OrthonormalBlocks { block_size, .. }
            if block_size == 0 || block_size > n || m % block_size != 0 =>
        {
            Err(Error::BadDimensions(format!(
                "block size {block_size} must divide {m} and not exceed {n}"
            )))
        }
        _ => Ok(()),
    }
}

/// Builds a consistent, row-normalized system with a planted Gaussian solution.
pub fn generate_problem(recipe: &ProblemRecipe) -> Result<LinearSystem> {
    validate(&recipe.kind)?;
    let mut rng = rng::from_seed(recipe.seed);
    let (m, n) = recipe.kind.dims();
    let data = match recipe.kind {
        RecipeKind::GaussianNormalized { .. } => gaussian(&mut rng, m * n),
        RecipeKind::RankDeficient { rank, .. } => {
            let u = orthonormal_columns(&mut rng, m, rank);
            let v = orthonormal_columns(&mut rng, n, rank);
            // singular values spread over [1, 10]
            let sigma: Vec<f64> = (0..rank)
                .map(|t| if rank == 1 { 1.0 } else { 1.0 + 9.0 * t as f64 / (rank - 1) as f64 })
                .collect();
            let mut data = vec![0.0; m * n];
            for t in 0..rank {
                for i in 0..m {
                    let s = sigma[t] * u[t][i];
                    for j in 0..n {
                        data[i * n + j] += s * v[t][j];
                    }
                }
            }
            data
        }
        RecipeKind::CoherentRows { coherence, .. } => {
            let common = orthonormal_columns(&mut rng, n, 1).remove(0);
            let mut data = Vec::with_capacity(m * n);
            for _ in 0..m {
                let g = gaussian(&mut rng, n);
                let ng = norm(&g);
                data.extend(g.iter().zip(&common).map(|(gi, ci)| coherence * ci + (1.0 - coherence) * gi / ng));
            }
            data
        }
        RecipeKind::OrthonormalBlocks { block_size, .. } => {
            let mut data = Vec::with_capacity(m * n);
            for _ in 0..m / block_size {
                for row in orthonormal_columns(&mut rng, n, block_size) {
                    data.extend(row);
                }
            }
            data
        }
    };
    let a = DenseMatrix::new(m, n, data)?;
    let x = gaussian(&mut rng, n);
    let b = a.matvec(&x);
    let (system, _) = normalize_rows(&LinearSystem::new(a, b)?)?;
    system.with_planted_solution(x)
}
