mod common;

use common::{dist, gaussian_vec, random_system, system_shape};
use kaczlab::linalg::{norm, Pseudoinverse};
use kaczlab::par::Execution;
use kaczlab::sampling::SamplingSpec;
use kaczlab::solver::{
    exact_one_step_expectation, run_monte_carlo, run_monte_carlo_with, run_solver, Method, SolverConfig, TraceLevel,
};
use kaczlab::stepsize::{StepsizePolicy, WeightScheme};
use proptest::prelude::*;
use proptest::sample::Index;

fn full_trace(config: SolverConfig) -> SolverConfig {
    config.with_trace_level(TraceLevel::FullIterates).with_residual_tol(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basic_distance_never_increases((m, n, rank, seed) in system_shape(), alpha in 0.01f64..1.99) {
        let system = random_system(m, n, rank, seed);
        let x0 = gaussian_vec(seed, 5, n);
        let pinv = Pseudoinverse::new(system.a());
        let target = pinv.project(&system, &x0);
        let config = full_trace(SolverConfig::new(
            Method::Basic,
            SamplingSpec::uniform_subset(m, 1).unwrap(),
            StepsizePolicy::ClassicConstant { alpha },
            60,
        ))
        .with_seed(seed)
        .with_x0(x0);
        let trace = run_solver(&config, &system).unwrap();
        let dists: Vec<f64> = trace.events.iter().map(|e| dist(e.iterate.as_ref().unwrap(), &target)).collect();
        for w in dists.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-13);
        }
    }

    #[test]
    fn iterates_stay_in_the_affine_row_space(
        (m, n, rank, seed) in system_shape(),
        tau_pick: Index,
        method_pick in 0usize..3,
    ) {
        let system = random_system(m, n, rank, seed);
        let tau = 1 + tau_pick.index(m);
        let (sampling, stepsize) = match method_pick {
            0 => (SamplingSpec::uniform_subset(m, tau).unwrap(), StepsizePolicy::Adaptive { delta: 0.7 }),
            1 => (SamplingSpec::uniform_subset(m, tau).unwrap(), StepsizePolicy::ClassicConstant { alpha: 1.2 }),
            _ => (SamplingSpec::full_batch(m).unwrap(), StepsizePolicy::Adaptive { delta: 1.0 }),
        };
        let x0 = gaussian_vec(seed, 6, n);
        let config = full_trace(SolverConfig::new(Method::Rbk, sampling, stepsize, 40))
            .with_seed(seed)
            .with_x0(x0.clone())
            .with_weights(WeightScheme::RowNormSq);
        let pinv = Pseudoinverse::new(system.a());
        for event in run_solver(&config, &system).unwrap().events {
            let delta: Vec<f64> = event.iterate.unwrap().iter().zip(&x0).map(|(a, b)| a - b).collect();
            let leak = dist(&pinv.project_row_space(system.a(), &delta), &delta);
            prop_assert!(leak <= 1e-8 * (1.0 + norm(&delta)));
            prop_assert!(event.residual_norm.is_finite());
        }
    }

    #[test]
    fn rbk_with_single_rows_is_basic((m, n, rank, seed) in system_shape(), alpha in 0.1f64..1.9) {
        let system = random_system(m, n, rank, seed);
        let rbk = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::uniform_subset(m, 1).unwrap(),
            StepsizePolicy::ClassicConstant { alpha },
            50,
        )
        .with_seed(seed);
        let mut basic = rbk.clone();
        basic.method = Method::Basic;
        let (a, b) = (run_solver(&rbk, &system).unwrap(), run_solver(&basic, &system).unwrap());
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.final_iterate, b.final_iterate);
    }

    #[test]
    fn one_step_expectation_matches_gradient_step(
        (m, n, rank, seed) in system_shape(),
        tau_pick: Index,
        alpha in 0.1f64..1.9,
    ) {
        let system = random_system(m, n, rank, seed);
        let tau = 1 + tau_pick.index(m);
        let x = gaussian_vec(seed, 9, n);
        let config = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::uniform_subset(m, tau).unwrap(),
            StepsizePolicy::ClassicConstant { alpha },
            1,
        );
        let exact = exact_one_step_expectation(&config, &system, &x).unwrap();
        let g = system.a().matvec_t(&system.residual(&x));
        let closed: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha / m as f64 * gi).collect();
        prop_assert!(dist(&exact, &closed) <= 1e-12 * (1.0 + norm(&x)));
    }

    #[test]
    fn runs_are_reproducible((m, n, rank, seed) in system_shape()) {
        let system = random_system(m, n, rank, seed);
        let config = SolverConfig::new(
            Method::Rbk,
            SamplingSpec::uniform_subset(m, m.min(3)).unwrap(),
            StepsizePolicy::Adaptive { delta: 1.0 },
            30,
        )
        .with_seed(seed);
        prop_assert_eq!(run_solver(&config, &system).unwrap(), run_solver(&config, &system).unwrap());
        let seq = run_monte_carlo_with(&config, &system, 70, Execution::Sequential).unwrap();
        let par = run_monte_carlo_with(&config, &system, 70, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn standard_error_shrinks_with_more_trials() {
    let system = random_system(20, 6, 6, 4);
    let config = SolverConfig::new(
        Method::Rbk,
        SamplingSpec::uniform_subset(20, 3).unwrap(),
        StepsizePolicy::ClassicConstant { alpha: 1.0 },
        10,
    )
    .with_seed(8);
    let small = run_monte_carlo(&config, &system, 500).unwrap();
    let large = run_monte_carlo(&config, &system, 2000).unwrap();
    for k in 1..=10 {
        let ratio = large.stderr_dist_sq[k] / small.stderr_dist_sq[k];
        assert!((0.35..0.7).contains(&ratio), "k={k} ratio {ratio}");
        let gap = (large.mean_dist_sq[k] - small.mean_dist_sq[k]).abs();
        assert!(gap <= 4.0 * small.stderr_dist_sq[k], "k={k}");
    }
}

#[test]
fn first_trial_of_monte_carlo_is_deterministic_and_zero_variance() {
    let system = random_system(8, 4, 4, 1);
    let config = SolverConfig::new(
        Method::Rbk,
        SamplingSpec::full_batch(8).unwrap(),
        StepsizePolicy::Adaptive { delta: 1.0 },
        15,
    );
    let mc = run_monte_carlo(&config, &system, 5).unwrap();
    assert!(mc.stderr_dist_sq.iter().all(|s| *s == 0.0));
    assert!(mc.stderr_iterate.iter().flatten().all(|s| *s == 0.0));
    assert!(matches!(
        run_monte_carlo(&config, &system, 0),
        Err(kaczlab::Error::InvalidParameter(_))
    ));
}
