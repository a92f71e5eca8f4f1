mod common;

use common::{gaussian_vec, random_system, system_shape};
use kaczlab::analysis::normalized_block_lambda;
use kaczlab::rng;
use kaczlab::sampling::{sample_block, SamplingSpec};
use kaczlab::stepsize::{
    adaptive_alpha, chebyshev_interval_eval, chebyshev_roots, chebyshev_schedule_pd, chebyshev_schedule_singular,
    constant_extrapolated_alpha, min_deviation_bound, AdaptiveStep, Kappa, WeightBounds, WeightScheme,
};
use proptest::prelude::*;
use proptest::sample::Index;

fn grid_max(ell: f64, u: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 4000;
    (0..=n).map(|i| f(ell + (u - ell) * i as f64 / n as f64).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adaptive_step_dominates_its_lower_bounds(
        (m, n, rank, seed) in system_shape(),
        tau_pick: Index,
        delta in 0.05f64..=1.0,
        row_norm_weights: bool,
    ) {
        let system = random_system(m, n, rank, seed);
        let tau = 1 + tau_pick.index(m);
        let spec = SamplingSpec::uniform_subset(m, tau).unwrap();
        let scheme = if row_norm_weights { WeightScheme::RowNormSq } else { WeightScheme::Uniform };
        let norms = system.a().row_norms_sq();
        let bounds = scheme.bounds(&spec, &norms).unwrap();
        let mut rng = rng::from_seed(seed);
        let block = sample_block(&spec, &mut rng);
        let lambda_block = normalized_block_lambda(system.a(), &block).unwrap();
        prop_assert!(lambda_block >= 1.0 - 1e-12 && lambda_block <= tau as f64 + 1e-12);
        let weights = scheme.realize(&block, &norms);
        prop_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let rows: Vec<&[f64]> = block.iter().map(|&i| system.a().row(i)).collect();
        let residuals = gaussian_vec(seed, 30, tau);
        match adaptive_alpha(&rows, &residuals, &weights, delta).unwrap() {
            AdaptiveStep::Step { alpha, l } => {
                // Jensen gives L ≥ 1; the block Gram gives L ≥ 1/(ω_max λ(block))
                prop_assert!(l >= 1.0 - 1e-10);
                let omega_max = weights.iter().cloned().fold(0.0, f64::max);
                prop_assert!(l >= 1.0 / (omega_max * lambda_block) * (1.0 - 1e-10));
                let constant = constant_extrapolated_alpha(bounds, lambda_block, delta).unwrap();
                prop_assert!(alpha >= constant * (1.0 - 1e-10));
                if tau == 1 {
                    prop_assert!((l - 1.0).abs() <= 1e-12);
                }
            }
            AdaptiveStep::Skip => prop_assert!(residuals.iter().all(|r| *r == 0.0) || tau > n),
        }
    }

    #[test]
    fn single_row_constant_step_is_classic(delta in 0.01f64..=1.0) {
        let alpha = constant_extrapolated_alpha(WeightBounds::uniform(1), 1.0, delta).unwrap();
        prop_assert!((alpha - (2.0 - delta)).abs() <= 1e-15);
    }

    #[test]
    fn chebyshev_beats_random_competitors(
        ell in 1e-3f64..1.0,
        width in 1e-2f64..20.0,
        k in 1usize..10,
        seed: u64,
    ) {
        let u = ell + width;
        let bound = min_deviation_bound(ell, u, k).unwrap();
        prop_assert!((chebyshev_interval_eval(k, ell, u, u).abs() - 1.0).abs() <= 1e-9);
        prop_assert!((chebyshev_interval_eval(k, ell, u, ell).abs() - 1.0).abs() <= 1e-9);
        let raw = gaussian_vec(seed, 0, 20 * k);
        for c in 0..20 {
            let roots: Vec<f64> = (0..k).map(|j| ell + width * (0.5 + 0.5 * raw[c * k + j].tanh())).collect();
            let competitor = grid_max(ell, u, |x| roots.iter().map(|r| 1.0 - x / r).product());
            prop_assert!(competitor >= bound * (1.0 - 1e-9));
        }
    }

    #[test]
    fn aggregate_polynomial_ignores_root_order(k in 1usize..30, m in 1usize..20, shuffle_seed: u64, ell in 1e-3f64..1.0) {
        let u = ell + 2.0;
        let perm = Kappa::Seeded { seed: shuffle_seed }.resolve(k).unwrap();
        let identity = Kappa::Identity.resolve(k).unwrap();
        let a = chebyshev_schedule_pd(ell, u, m, k, &identity).unwrap();
        let b = chebyshev_schedule_pd(ell, u, m, k, &perm).unwrap();
        let nodes = chebyshev_roots(k + 1);
        let leja = Kappa::Leja.resolve_on(&nodes[..k]).unwrap();
        let c = chebyshev_schedule_singular(u, m, k, &identity).unwrap();
        let d = chebyshev_schedule_singular(u, m, k, &leja).unwrap();
        for i in 0..=50 {
            let lambda = u * i as f64 / 50.0;
            prop_assert!((a.residual_polynomial(m, lambda) - b.residual_polynomial(m, lambda)).abs() <= 1e-10);
            prop_assert!((c.residual_polynomial(m, lambda) - d.residual_polynomial(m, lambda)).abs() <= 1e-10);
        }
    }
}
