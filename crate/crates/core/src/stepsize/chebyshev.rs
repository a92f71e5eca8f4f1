use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `T_k(x)` via `T_{k+1} = 2x T_k − T_{k−1}`, `T_0 = 1`, `T_1 = x`.
pub fn chebyshev_eval(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Roots `cos((2i−1)π/(2k))`, `i = 1..k`, in descending order.
pub fn chebyshev_roots(k: usize) -> Vec<f64> {
    assert!(k >= 1, "T_0 has no roots");
    (1..=k).map(|i| ((2 * i - 1) as f64 * PI / (2 * k) as f64).cos()).collect()
}

/// `T_k` composed with the affine map sending `[ell, u]` onto `[−1, 1]`.
pub fn chebyshev_interval_eval(k: usize, ell: f64, u: f64, x: f64) -> f64 {
    chebyshev_eval(k, 2.0 * x / (u - ell) - (u + ell) / (u - ell))
}

/// Optimal value of `min max_{[ell,u]} |P(x)|` over degree-`k` polynomials with `P(0) = 1`,
/// namely `1 / |T_k^{(ell,u)}(0)|`.
pub fn min_deviation_bound(ell: f64, u: f64, k: usize) -> Result<f64> {
    if !(ell > 0.0 && ell < u && u.is_finite()) {
        return Err(Error::BadInterval { lo: ell, hi: u });
    }
    Ok(1.0 / chebyshev_interval_eval(k, ell, u, 0.0).abs())
}

/// `(√u − √ℓ) / (√u + √ℓ)`
pub fn chebyshev_factor(ell: f64, u: f64) -> f64 {
    let (su, sl) = (u.sqrt(), ell.sqrt());
    (su - sl) / (su + sl)
}

/// Order in which the Chebyshev roots are consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kappa {
    #[default]
    Identity,
    /// Uniform random permutation drawn from stream 0 of `seed`.
    Seeded { seed: u64 },
    Explicit { perm: Vec<usize> },
    /// Leja order of the roots; keeps partial products bounded in floating point.
    Leja,
}

impl Kappa {
    /// A permutation of `0..k` over the roots of `T_k`.
    pub fn resolve(&self, k: usize) -> Result<Vec<usize>> {
        self.resolve_on(&chebyshev_roots(k))
    }

    /// A permutation of `0..nodes.len()`; only the Leja order looks at the node positions.
    pub fn resolve_on(&self, nodes: &[f64]) -> Result<Vec<usize>> {
        let k = nodes.len();
        match self {
            Kappa::Leja => Ok(leja_order(nodes)),
            Kappa::Identity => Ok((0..k).collect()),
            Kappa::Seeded { seed } => {
                use rand::seq::SliceRandom;
                let mut perm: Vec<usize> = (0..k).collect();
                perm.shuffle(&mut crate::rng::from_seed(*seed));
                Ok(perm)
            }
            Kappa::Explicit { perm } => {
                check_permutation(perm, k)?;
                Ok(perm.clone())
            }
        }
    }
}

/// Greedy Leja sequence: start at the node of largest modulus, then repeatedly take the
/// node maximizing the product of distances to those already chosen.
pub fn leja_order(nodes: &[f64]) -> Vec<usize> {
    let k = nodes.len();
    let mut order = Vec::with_capacity(k);
    let mut used = vec![false; k];
    // log of the distance product, kept to avoid underflow
    let mut score = vec![0.0_f64; k];
    let Some(first) = (0..k).max_by(|&a, &b| nodes[a].abs().total_cmp(&nodes[b].abs())) else {
        return order;
    };
    let mut next = first;
    loop {
        used[next] = true;
        order.push(next);
        for j in 0..k {
            if !used[j] {
                score[j] += (nodes[j] - nodes[next]).abs().ln();
            }
        }
        match (0..k).filter(|&j| !used[j]).max_by(|&a, &b| score[a].total_cmp(&score[b])) {
            Some(j) => next = j,
            None => return order,
        }
    }
}

fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(Error::InvalidParameter(format!("kappa has {} entries, horizon is {k}", perm.len())));
    }
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidParameter(format!("kappa is not a permutation of 0..{k}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Precomputed stepsizes for a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSchedule {
    pub alphas: Vec<f64>,
    /// Lower end of the spectrum interval of `AAᵀ/m` (0 for the singular schedule).
    pub ell: f64,
    /// Upper end, `λ_max/m`.
    pub u: f64,
    pub kappa: Vec<usize>,
}

impl ChebyshevSchedule {
    pub fn horizon(&self) -> usize {
        self.alphas.len()
    }

    /// `Π_j (1 − α_j λ)`, the residual polynomial of the schedule on the `AAᵀ/m` scale
    /// once `α_j` is divided by `m`.
    pub fn residual_polynomial(&self, m: usize, lambda: f64) -> f64 {
        self.alphas.iter().map(|a| 1.0 - a / m as f64 * lambda).product()
    }
}

/// Stepsizes from the inverse roots of the shifted Chebyshev polynomial on `[λ_min/m, λ_max/m]`.
pub fn chebyshev_schedule_pd(
    lambda_min: f64,
    lambda_max: f64,
    m: usize,
    k: usize,
    kappa: &[usize],
) -> Result<ChebyshevSchedule> {
    if !(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max.is_finite()) {
        return Err(Error::BadSpectrum(format!(
            "need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    check_permutation(kappa, k)?;
    let mf = m as f64;
    let alphas = kappa
        .iter()
        .map(|&kj| {
            let c = ((2 * kj + 1) as f64 * PI / (2 * k) as f64).cos();
            2.0 * mf / ((lambda_max + lambda_min) + (lambda_max - lambda_min) * c)
        })
        .collect();
    Ok(ChebyshevSchedule { alphas, ell: lambda_min / mf, u: lambda_max / mf, kappa: kappa.to_vec() })
}

/// Stepsizes for singular `AAᵀ`: inverse roots of the degree-`k+1` polynomial vanishing at 0
/// with unit slope, built around `r_{k+1}`, the root of `T_{k+1}` closest to −1.
pub fn chebyshev_schedule_singular(
    lambda_max: f64,
    m: usize,
    k: usize,
    kappa: &[usize],
) -> Result<ChebyshevSchedule> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::BadSpectrum(format!("need lambda_max > 0, got {lambda_max}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    check_permutation(kappa, k)?;
    let mf = m as f64;
    let denom = (2 * (k + 1)) as f64;
    let r_last = ((2 * k + 1) as f64 * PI / denom).cos();
    let alphas = kappa
        .iter()
        .map(|&kj| {
            let c = ((2 * kj + 1) as f64 * PI / denom).cos();
            mf * (1.0 - r_last) / (lambda_max * (c - r_last))
        })
        .collect();
    Ok(ChebyshevSchedule { alphas, ell: 0.0, u: lambda_max / mf, kappa: kappa.to_vec() })
}
