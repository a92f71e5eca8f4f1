mod common;

use kaczlab::rng;
use kaczlab::sampling::{
    enumerate_supports, membership_probabilities, sample_block, Paving, SamplingSpec,
};
use proptest::prelude::*;

fn partition_of(m: usize, ell: usize, seed: u64) -> Paving {
    Paving::random(seed, m, ell).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_subsets_are_sorted_distinct_rows(m in 1usize..40, frac in 0.0f64..1.0, seed: u64) {
        let tau = 1 + ((m - 1) as f64 * frac) as usize;
        let spec = SamplingSpec::uniform_subset(m, tau).unwrap();
        let mut rng = rng::from_seed(seed);
        for _ in 0..20 {
            let block = sample_block(&spec, &mut rng);
            prop_assert_eq!(block.len(), tau);
            prop_assert!(block.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(block.iter().all(|&i| i < m));
        }
    }

    #[test]
    fn pavings_are_balanced_permutations(m in 1usize..60, ell_frac in 0.0f64..1.0, seed: u64) {
        let ell = 1 + ((m - 1) as f64 * ell_frac) as usize;
        let paving = partition_of(m, ell, seed);
        prop_assert_eq!(paving.blocks.len(), ell);
        let mut all: Vec<usize> = paving.blocks.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
        let sizes: Vec<usize> = paving.blocks.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(Paving::from_json(&paving.to_json()).unwrap(), paving);
    }

    #[test]
    fn support_probabilities_match_membership(m in 1usize..9, frac in 0.0f64..1.0, ell_frac in 0.0f64..1.0, seed: u64) {
        let tau = 1 + ((m - 1) as f64 * frac) as usize;
        let ell = 1 + ((m - 1) as f64 * ell_frac) as usize;
        let paving = partition_of(m, ell, seed);
        let weights: Vec<f64> = (0..ell).map(|j| 1.0 + j as f64).collect();
        let total: f64 = weights.iter().sum();
        let specs = [
            SamplingSpec::uniform_subset(m, tau).unwrap(),
            SamplingSpec::partition(paving.blocks.clone(), weights.iter().map(|w| w / total).collect()).unwrap(),
        ];
        for spec in &specs {
            let supports = enumerate_supports(spec).unwrap();
            let mass: f64 = supports.iter().map(|(_, p)| p).sum();
            prop_assert!((mass - 1.0).abs() <= 1e-12);
            let mut from_supports = vec![0.0; m];
            for (block, p) in &supports {
                for &i in block {
                    from_supports[i] += p;
                }
            }
            let expected = membership_probabilities(spec);
            for i in 0..m {
                prop_assert!((from_supports[i] - expected[i]).abs() <= 1e-12);
            }
            let size: f64 = expected.iter().sum();
            prop_assert!((size - spec.expected_block_size()).abs() <= 1e-12);
        }
        let uniform = membership_probabilities(&specs[0]);
        prop_assert!(uniform.iter().all(|p| (p - tau as f64 / m as f64).abs() <= 1e-15));
    }
}

#[test]
fn paving_row_placement_is_uniform() {
    // each of 6 rows should land in each of 3 blocks with probability 1/3
    let (m, ell, draws) = (6, 3, 6000);
    let mut counts = vec![vec![0usize; ell]; m];
    for seed in 0..draws {
        for (j, block) in partition_of(m, ell, seed).blocks.iter().enumerate() {
            for &i in block {
                counts[i][j] += 1;
            }
        }
    }
    let p = 1.0 / ell as f64;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for row in &counts {
        for &c in row {
            assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sd, "{counts:?}");
        }
    }
}

#[test]
fn partition_sampling_follows_block_probabilities() {
    let spec = SamplingSpec::partition(vec![vec![0], vec![1, 2], vec![3]], vec![0.5, 0.3, 0.2]).unwrap();
    let mut rng = rng::from_seed(3);
    let mut counts = [0usize; 3];
    let draws = 20_000;
    for _ in 0..draws {
        let block = sample_block(&spec, &mut rng);
        counts[match block[0] { 0 => 0, 1 => 1, _ => 2 }] += 1;
    }
    for (c, p) in counts.iter().zip([0.5, 0.3, 0.2]) {
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - draws as f64 * p).abs() <= 5.0 * sd, "{counts:?}");
    }
}
