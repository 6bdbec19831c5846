use proptest::prelude::*;
use sparsekit::algorithms::{run_algorithm, AlgorithmConfig, Variant};
use sparsekit::cone::SolverSettings;
use sparsekit::experiments::{generate_instance, Dims, GeneratedInstance};
use sparsekit::linalg::norm_inf;
use sparsekit::oracle::{l0_min, support_feasible};

fn small() -> impl Strategy<Value = GeneratedInstance> {
    (any::<u64>(), prop::sample::select(vec![0usize, 3]), 1usize..5).prop_map(|(seed, l, k)| {
        generate_instance(Dims { m: 5, n: 10, l }, k, 1e-3, seed, true).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_are_feasible_and_never_beat_the_oracle(
        g in small(),
        v in prop::sample::select(Variant::ALL.to_vec()),
    ) {
        let inst = &g.instance;
        let cfg = AlgorithmConfig::defaults(v);
        let trace = run_algorithm(inst, &cfg).unwrap();
        for it in &trace.iterates {
            let scale = 1.0 + norm_inf(&it.x);
            prop_assert!(inst.infeasibility(&it.x) <= 1e-6 * scale, "{v} k={}", it.k);
        }
        let oracle = l0_min(inst, None, &SolverSettings::default()).unwrap();
        let k_star = oracle.min_card.unwrap();
        prop_assert!(k_star <= g.x_star.iter().filter(|v| **v != 0.0).count());
        prop_assert!(trace.final_sparsity >= k_star, "{v}: {} < {k_star}", trace.final_sparsity);
        let again = run_algorithm(inst, &cfg).unwrap();
        prop_assert_eq!(again.final_x, trace.final_x);
    }

    #[test]
    fn support_feasibility_is_monotone(g in small(), extra in 0usize..10) {
        let inst = &g.instance;
        let s = SolverSettings::default();
        let support: Vec<usize> = (0..10).filter(|&i| g.x_star[i] != 0.0).collect();
        prop_assert!(support_feasible(inst, &support, &s).unwrap());
        let mut bigger = support.clone();
        if !bigger.contains(&extra) {
            bigger.push(extra);
            bigger.sort_unstable();
        }
        prop_assert!(support_feasible(inst, &bigger, &s).unwrap());
        // and a shrunken infeasible support stays infeasible under removal
        let smaller: Vec<usize> = support.iter().copied().skip(1).collect();
        if !support_feasible(inst, &smaller, &s).unwrap() && !smaller.is_empty() {
            let tiny = &smaller[1..];
            prop_assert!(!support_feasible(inst, tiny, &s).unwrap());
        }
    }
}
