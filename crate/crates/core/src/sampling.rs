//! Probability spaces over row subsets.
//!
//! Indices are 0-based in memory. Every JSON form (pavings and partition
//! specs) uses 1-based row indices.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, Rng};

/// Largest support count [`enumerate_supports`] will materialize.
pub const MAX_SUPPORTS: u128 = 100_000;

const PROB_SUM_TOL: f64 = 1e-12;

/// Distribution of the row block drawn at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub enum SamplingSpec {
    /// Every `tau`-subset of the `m` rows is equally likely.
    UniformSubset { m: usize, tau: usize },
    /// Block `l` of a partition of the rows is drawn with probability `probs[l]`.
    Partition { blocks: Vec<Vec<usize>>, probs: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SpecRepr {
    UniformSubset { m: usize, tau: usize },
    Partition { blocks: Vec<Vec<usize>>, probs: Vec<f64> },
}

impl From<SamplingSpec> for SpecRepr {
    fn from(spec: SamplingSpec) -> Self {
        match spec {
            SamplingSpec::UniformSubset { m, tau } => SpecRepr::UniformSubset { m, tau },
            SamplingSpec::Partition { blocks, probs } => SpecRepr::Partition {
                blocks: to_one_based(&blocks),
                probs,
            },
        }
    }
}

impl TryFrom<SpecRepr> for SamplingSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr {
            SpecRepr::UniformSubset { m, tau } => SamplingSpec::uniform_subset(m, tau),
            SpecRepr::Partition { blocks, probs } => {
                SamplingSpec::partition(from_one_based(&blocks)?, probs)
            }
        }
    }
}

fn to_one_based(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()
}

fn from_one_based(blocks: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|&i| {
                    i.checked_sub(1)
                        .ok_or_else(|| Error::InvalidSampling("row indices are 1-based".into()))
                })
                .collect()
        })
        .collect()
}

impl SamplingSpec {
    pub fn uniform_subset(m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 || tau > m {
            return Err(Error::InvalidSampling(format!("need 1 <= tau <= m, got tau={tau}, m={m}")));
        }
        Ok(SamplingSpec::UniformSubset { m, tau })
    }

    /// Validates disjointness, coverage of `0..m` and the probability vector.
    pub fn partition(mut blocks: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() != probs.len() {
            return Err(Error::InvalidSampling("one probability per nonempty block".into()));
        }
        let m: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; m];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidSampling("empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= m || seen[i] {
                    return Err(Error::InvalidSampling(format!(
                        "blocks must partition 0..{m} (row {i} repeated or out of range)"
                    )));
                }
                seen[i] = true;
            }
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidSampling("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSampling(format!("probabilities sum to {total}")));
        }
        Ok(SamplingSpec::Partition { blocks, probs })
    }

    /// Partition with `P(J_l) = 1/ℓ`.
    pub fn partition_uniform(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let ell = blocks.len();
        Self::partition(blocks, vec![1.0 / ell as f64; ell])
    }

    /// Partition with `P(J_l) = ‖A_{J_l}‖_F² / ‖A‖_F²`.
    pub fn partition_frobenius(blocks: Vec<Vec<usize>>, a: &DenseMatrix) -> Result<Self> {
        let norms = a.row_norms_sq();
        if blocks.iter().flatten().any(|&i| i >= norms.len()) {
            return Err(Error::InvalidSampling("block index exceeds matrix rows".into()));
        }
        let total: f64 = norms.iter().sum();
        let probs = blocks
            .iter()
            .map(|b| b.iter().map(|&i| norms[i]).sum::<f64>() / total)
            .collect();
        Self::partition(blocks, probs)
    }

    /// The single block `0..m`.
    pub fn full_batch(m: usize) -> Result<Self> {
        Self::partition(vec![(0..m).collect()], vec![1.0])
    }

    /// Contiguous blocks of `block_size` rows (the last one may be shorter), uniform probabilities.
    pub fn aligned(m: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 || block_size > m {
            return Err(Error::InvalidSampling(format!("block size {block_size} for {m} rows")));
        }
        let blocks = (0..m).step_by(block_size).map(|s| (s..(s + block_size).min(m)).collect()).collect();
        Self::partition_uniform(blocks)
    }

    pub fn from_paving(paving: &Paving) -> Result<Self> {
        Self::partition_uniform(paving.blocks.clone())
    }

    /// Number of rows the spec ranges over.
    pub fn rows(&self) -> usize {
        match self {
            SamplingSpec::UniformSubset { m, .. } => *m,
            SamplingSpec::Partition { blocks, .. } => blocks.iter().map(Vec::len).sum(),
        }
    }

    /// `Some(τ)` when every support has the same size.
    pub fn fixed_block_size(&self) -> Option<usize> {
        match self {
            SamplingSpec::UniformSubset { tau, .. } => Some(*tau),
            SamplingSpec::Partition { blocks, probs } => {
                let mut sizes = blocks.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(b, _)| b.len());
                let first = sizes.next()?;
                sizes.all(|s| s == first).then_some(first)
            }
        }
    }

    pub fn max_block_size(&self) -> usize {
        match self {
            SamplingSpec::UniformSubset { tau, .. } => *tau,
            SamplingSpec::Partition { blocks, probs } => blocks
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(b, _)| b.len())
                .max()
                .unwrap_or(0),
        }
    }

    /// `E|J|`
    pub fn expected_block_size(&self) -> f64 {
        match self {
            SamplingSpec::UniformSubset { tau, .. } => *tau as f64,
            SamplingSpec::Partition { blocks, probs } => {
                blocks.iter().zip(probs).map(|(b, p)| b.len() as f64 * p).sum()
            }
        }
    }

    /// Number of supports with positive probability.
    pub fn support_count(&self) -> u128 {
        match self {
            SamplingSpec::UniformSubset { m, tau } => binomial_capped(*m, *tau, u128::MAX),
            SamplingSpec::Partition { probs, .. } => probs.iter().filter(|p| **p > 0.0).count() as u128,
        }
    }
}

/// Draws one block; indices are returned in ascending order.
pub fn sample_block(spec: &SamplingSpec, rng: &mut Rng) -> Vec<usize> {
    match spec {
        SamplingSpec::UniformSubset { m, tau } => {
            if tau == m {
                return (0..*m).collect();
            }
            let mut idx = rand::seq::index::sample(rng, *m, *tau).into_vec();
            idx.sort_unstable();
            idx
        }
        SamplingSpec::Partition { blocks, probs } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = None;
            for (l, &p) in probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                chosen = Some(l);
                acc += p;
                if u < acc {
                    break;
                }
            }
            blocks[chosen.expect("validated spec has a positive block")].clone()
        }
    }
}

/// `p_i = P(i ∈ J)`.
pub fn membership_probability(spec: &SamplingSpec, i: usize) -> Result<f64> {
    let m = spec.rows();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, len: m });
    }
    Ok(match spec {
        SamplingSpec::UniformSubset { m, tau } => *tau as f64 / *m as f64,
        SamplingSpec::Partition { blocks, probs } => blocks
            .iter()
            .zip(probs)
            .find(|(b, _)| b.binary_search(&i).is_ok())
            .map(|(_, p)| *p)
            .expect("partition covers every row"),
    })
}

/// All `p_i` at once.
pub fn membership_probabilities(spec: &SamplingSpec) -> Vec<f64> {
    match spec {
        SamplingSpec::UniformSubset { m, tau } => vec![*tau as f64 / *m as f64; *m],
        SamplingSpec::Partition { blocks, probs } => {
            let mut p = vec![0.0; spec.rows()];
            for (b, &pb) in blocks.iter().zip(probs) {
                for &i in b {
                    p[i] = pb;
                }
            }
            p
        }
    }
}

fn binomial_capped(m: usize, k: usize, cap: u128) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // exact: acc * (m - j) / (j + 1) stays integral at every step
        acc = match acc.checked_mul((m - j) as u128) {
            Some(v) => v / (j as u128 + 1),
            None => return cap.max(MAX_SUPPORTS + 1),
        };
        if acc > cap {
            return acc;
        }
    }
    acc
}

/// Every support with its probability. Uniform subsets come out in lexicographic order.
pub fn enumerate_supports(spec: &SamplingSpec) -> Result<Vec<(Vec<usize>, f64)>> {
    match spec {
        SamplingSpec::UniformSubset { m, tau } => {
            let count = binomial_capped(*m, *tau, MAX_SUPPORTS);
            if count > MAX_SUPPORTS {
                return Err(Error::TooLarge(count));
            }
            let p = 1.0 / count as f64;
            let mut out = Vec::with_capacity(count as usize);
            let mut comb: Vec<usize> = (0..*tau).collect();
            loop {
                out.push((comb.clone(), p));
                // rightmost position that can still be advanced
                let mut i = *tau;
                while i > 0 && comb[i - 1] == i - 1 + m - tau {
                    i -= 1;
                }
                if i == 0 {
                    return Ok(out);
                }
                let i = i - 1;
                comb[i] += 1;
                for j in (i + 1)..*tau {
                    comb[j] = comb[j - 1] + 1;
                }
            }
        }
        SamplingSpec::Partition { blocks, probs } => Ok(blocks
            .iter()
            .cloned()
            .zip(probs.iter().copied())
            .filter(|(_, p)| *p > 0.0)
            .collect()),
    }
}

/// A partition of the rows into near-equal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Paving {
    pub blocks: Vec<Vec<usize>>,
    pub ell: usize,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct PavingRepr {
    ell: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    blocks: Vec<Vec<usize>>,
}

impl Paving {
    /// Random paving from stream 0 of `seed`.
    pub fn random(seed: u64, m: usize, ell: usize) -> Result<Self> {
        let mut paving = build_random_paving(&mut rng::from_seed(seed), m, ell)?;
        paving.seed = Some(seed);
        Ok(paving)
    }

    pub fn rows(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let repr = PavingRepr { ell: self.ell, seed: self.seed, blocks: to_one_based(&self.blocks) };
        serde_json::to_string_pretty(&repr).expect("paving serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: PavingRepr = serde_json::from_str(text)?;
        let blocks = from_one_based(&repr.blocks)?;
        if blocks.len() != repr.ell {
            return Err(Error::InvalidSampling(format!(
                "paving declares ell={} but lists {} blocks",
                repr.ell,
                blocks.len()
            )));
        }
        // reuse the partition validator
        let spec = SamplingSpec::partition_uniform(blocks)?;
        let SamplingSpec::Partition { blocks, .. } = spec else { unreachable!() };
        Ok(Paving { blocks, ell: repr.ell, seed: repr.seed })
    }
}

/// Uniform random permutation of `0..m` cut into `ell` contiguous runs whose sizes differ by at most one.
///
/// Run `i` covers permuted positions `⌊i·m/ℓ⌋ .. ⌊(i+1)·m/ℓ⌋`.
pub fn build_random_paving(rng: &mut Rng, m: usize, ell: usize) -> Result<Paving> {
    if ell == 0 || ell > m {
        return Err(Error::BadBlockCount { m, ell });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let blocks = (0..ell)
        .map(|i| {
            let (lo, hi) = (i * m / ell, (i + 1) * m / ell);
            let mut block = perm[lo..hi].to_vec();
            block.sort_unstable();
            block
        })
        .collect();
    Ok(Paving { blocks, ell, seed: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_uniform_subset_always_everything() {
        let spec = SamplingSpec::uniform_subset(5, 5).unwrap();
        let mut rng = rng::from_seed(1);
        for _ in 0..10 {
            assert_eq!(sample_block(&spec, &mut rng), vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn degenerate_partition_probability() {
        let spec = SamplingSpec::partition(vec![vec![0, 1], vec![2, 3]], vec![1.0, 0.0]).unwrap();
        let mut rng = rng::from_seed(2);
        for _ in 0..100 {
            assert_eq!(sample_block(&spec, &mut rng), vec![0, 1]);
        }
    }

    #[test]
    fn uniform_pairs_are_equally_likely() {
        let spec = SamplingSpec::uniform_subset(4, 2).unwrap();
        let mut rng = rng::from_seed(3);
        let supports = enumerate_supports(&spec).unwrap();
        let mut counts = vec![0usize; supports.len()];
        let draws = 100_000;
        for _ in 0..draws {
            let j = sample_block(&spec, &mut rng);
            let pos = supports.iter().position(|(s, _)| *s == j).unwrap();
            counts[pos] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn membership_examples() {
        let spec = SamplingSpec::uniform_subset(4, 2).unwrap();
        for i in 0..4 {
            assert_eq!(membership_probability(&spec, i).unwrap(), 0.5);
        }
        assert!(matches!(
            membership_probability(&spec, 4),
            Err(Error::IndexOutOfRange { index: 4, len: 4 })
        ));
        let part = SamplingSpec::aligned(6, 2).unwrap();
        for i in 0..6 {
            assert!((membership_probability(&part, i).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn frobenius_probs_match_uniform_on_normalized_equal_blocks() {
        let a = DenseMatrix::identity(6);
        let blocks = vec![vec![0, 3], vec![1, 4], vec![2, 5]];
        let spec = SamplingSpec::partition_frobenius(blocks, &a).unwrap();
        for i in 0..6 {
            assert!((membership_probability(&spec, i).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn paving_shapes() {
        let mut rng = rng::from_seed(4);
        let p = build_random_paving(&mut rng, 6, 3).unwrap();
        assert!(p.blocks.iter().all(|b| b.len() == 2));
        let mut all: Vec<usize> = p.blocks.concat();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());

        let p = build_random_paving(&mut rng, 5, 2).unwrap();
        let mut sizes: Vec<usize> = p.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);

        let p = build_random_paving(&mut rng, 4, 1).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1, 2, 3]]);

        assert!(matches!(build_random_paving(&mut rng, 3, 4), Err(Error::BadBlockCount { .. })));
        assert!(matches!(build_random_paving(&mut rng, 3, 0), Err(Error::BadBlockCount { .. })));
    }

    #[test]
    fn paving_is_seed_deterministic() {
        assert_eq!(Paving::random(11, 37, 5).unwrap(), Paving::random(11, 37, 5).unwrap());
    }

    #[test]
    fn paving_json_round_trip_is_one_based() {
        let p = Paving::random(5, 7, 3).unwrap();
        let text = p.to_json();
        assert!(!text.contains("[0") && !text.contains(" 0,"));
        assert_eq!(Paving::from_json(&text).unwrap(), p);
        assert!(Paving::from_json(r#"{"ell":2,"blocks":[[1,2],[2,3]]}"#).is_err());
        assert!(Paving::from_json(r#"{"ell":1,"blocks":[[0,1]]}"#).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let spec = SamplingSpec::uniform_subset(3, 2).unwrap();
        let sup = enumerate_supports(&spec).unwrap();
        let sets: Vec<Vec<usize>> = sup.iter().map(|(s, _)| s.clone()).collect();
        assert_eq!(sets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert!(sup.iter().all(|(_, p)| (p - 1.0 / 3.0).abs() < 1e-15));

        let part = SamplingSpec::partition(vec![vec![0], vec![1]], vec![0.3, 0.7]).unwrap();
        let sup = enumerate_supports(&part).unwrap();
        assert_eq!(sup, vec![(vec![0], 0.3), (vec![1], 0.7)]);

        let big = SamplingSpec::uniform_subset(50, 10).unwrap();
        assert!(matches!(enumerate_supports(&big), Err(Error::TooLarge(_))));

        let single = SamplingSpec::uniform_subset(4, 4).unwrap();
        assert_eq!(enumerate_supports(&single).unwrap(), vec![(vec![0, 1, 2, 3], 1.0)]);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SamplingSpec::uniform_subset(3, 0).is_err());
        assert!(SamplingSpec::uniform_subset(3, 4).is_err());
        assert!(SamplingSpec::partition(vec![vec![0, 1], vec![1, 2]], vec![0.5, 0.5]).is_err());
        assert!(SamplingSpec::partition(vec![vec![0], vec![2]], vec![0.5, 0.5]).is_err());
        assert!(SamplingSpec::partition(vec![vec![0], vec![1]], vec![0.5, 0.6]).is_err());
        assert!(SamplingSpec::partition(vec![vec![0], vec![1]], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn spec_json_uses_one_based_rows() {
        let spec = SamplingSpec::partition(vec![vec![0, 2], vec![1]], vec![0.25, 0.75]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("[[1,3],[2]]"), "{text}");
        let back: SamplingSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let uni: SamplingSpec = serde_json::from_str(r#"{"kind":"uniform_subset","m":5,"tau":2}"#).unwrap();
        assert_eq!(uni, SamplingSpec::UniformSubset { m: 5, tau: 2 });
    }
}
