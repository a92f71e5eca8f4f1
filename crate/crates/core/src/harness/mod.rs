//! Problem generators and experiment orchestration.

mod choice;
mod experiment;
mod recipe;

pub use choice::{AutoConfig, SamplingChoice, StepsizeChoice, DEFAULT_LAMBDA_BUDGET};
pub use experiment::{
    recipe_spectral_sq, run_experiment, theory_factor, ConfigOutcome, CurvePoint, ExperimentPlan, ExperimentReport,
    PlanEntry, PlanOutputs,
};
pub use recipe::{generate_problem, ProblemRecipe, RecipeKind};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::block_lambda_max;
    use crate::linalg::sym_eigenvalues;
    use crate::sampling::SamplingSpec;
    use crate::solver::Method;

    #[test]
    fn recipes_parse_and_print() {
        for s in ["gaussian:50x20", "rankdef:6x4:2", "coherent:10x5:0.5", "orthoblocks:8x8:4"] {
            assert_eq!(s.parse::<RecipeKind>().unwrap().to_string(), s);
        }
        for s in ["gaussian", "gaussian:5", "rankdef:6x4", "blob:3x3", "gaussian:3x3:1"] {
            assert!(s.parse::<RecipeKind>().is_err(), "{s}");
        }
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        let r = ProblemRecipe::parse("gaussian:4x4", 7).unwrap();
        let a = generate_problem(&r).unwrap();
        assert_eq!(a, generate_problem(&r).unwrap());
        assert!(a.is_normalized() && a.rows_are_unit());
        assert_ne!(a, generate_problem(&ProblemRecipe::parse("gaussian:4x4", 8).unwrap()).unwrap());
    }

    #[test]
    fn orthonormal_blocks_have_unit_block_lambda() {
        let s = generate_problem(&ProblemRecipe::parse("orthoblocks:8x8:4", 1).unwrap()).unwrap();
        let spec = SamplingSpec::aligned(8, 4).unwrap();
        assert!((block_lambda_max(&s, &spec, 10, 0).unwrap().value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_has_requested_rank() {
        let s = generate_problem(&ProblemRecipe::parse("rankdef:6x4:2", 3).unwrap()).unwrap();
        assert_eq!(sym_eigenvalues(&s.a().gram_rows()).unwrap().rank_estimate, 2);
        assert_eq!(sym_eigenvalues(&s.a().gram_cols()).unwrap().rank_estimate, 2);
    }

    #[test]
    fn bad_recipes_are_rejected() {
        for s in ["rankdef:6x4:5", "orthoblocks:8x4:8", "orthoblocks:9x8:4", "coherent:4x4:1.5", "gaussian:0x3"] {
            let r = ProblemRecipe::parse(s, 0).unwrap();
            assert!(matches!(generate_problem(&r), Err(crate::Error::BadDimensions(_))), "{s}");
        }
    }

    #[test]
    fn coherent_rows_at_full_coherence_are_identical() {
        let s = generate_problem(&ProblemRecipe::parse("coherent:5x3:1", 2).unwrap()).unwrap();
        for i in 1..5 {
            assert!(s.a().row(i).iter().zip(s.a().row(0)).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn sampling_choices_round_trip() {
        for s in ["uniform:4", "partition:3", "partition-frob:2", "aligned:5", "full"] {
            assert_eq!(s.parse::<SamplingChoice>().unwrap().to_string(), s);
        }
        assert!("uniform".parse::<SamplingChoice>().is_err());
    }

    #[test]
    fn small_experiment_runs() {
        let plan = ExperimentPlan::from_json(
            r#"{
                "recipe": {"kind": "orthonormal_blocks", "m": 16, "n": 16, "block_size": 4, "seed": 1},
                "trials": 8,
                "configs": [
                    {"label": "basic", "method": "basic", "sampling": "uniform:1",
                     "stepsize": {"kind": "classic", "alpha": 1.0}, "max_iters": 30},
                    {"label": "rbk", "method": "rbk", "sampling": "aligned:4",
                     "stepsize": {"kind": "constant-extrapolated"}, "max_iters": 30}
                ]
            }"#,
        )
        .unwrap();
        let report = run_experiment(&plan, crate::par::Execution::Sequential).unwrap();
        assert_eq!(report.configs.len(), 2);
        assert_eq!(report.configs[1].config.method, Method::Rbk);
        for c in &report.configs {
            assert_eq!(c.curve.len(), 31);
            assert_eq!(c.to_csv().lines().count(), 32);
        }
        assert!((report.configs[1].theory_speedup.unwrap() - 4.0).abs() < 1e-9);
    }
}
