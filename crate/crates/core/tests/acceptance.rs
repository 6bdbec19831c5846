//! One PASS/FAIL line per acceptance criterion. Runs without the libtest harness so the
//! lines always show; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sparsekit::algorithms::{run_algorithm, AlgorithmConfig, Variant};
use sparsekit::cone::SolverSettings;
use sparsekit::duality::{
    complementarity_gap, kkt_check, strict_pair_central_path, strict_pair_construct,
};
use sparsekit::experiments::{
    generate_instance, run_sweep, write_csv, AlgorithmSpec, Case, Dims, SweepSpec,
};
use sparsekit::linalg::norm_inf;
use sparsekit::merit::{merit_gradient, merit_value, MeritFamily, MeritFunction};
use sparsekit::modeling::{solve_density, solve_nonconic, solve_weighted_l1, Instance};
use sparsekit::oracle::l0_min;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c1_example1_recovery() -> Outcome {
    let inst = Instance::example1();
    let t0 = Instant::now();
    let sol = solve_weighted_l1(&inst, &[100.0, 100.0, 1.0, 1.0], &SolverSettings::default())
        .map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let err = sol
        .primal
        .x
        .iter()
        .zip([0.0, 0.0, 2.0, 1.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(err <= 1e-4 && secs < 1.0, format!("linf error {err:.2e}, {secs:.3}s"))
}

fn c2_second_weight() -> Outcome {
    let inst = Instance::example1();
    let sol = solve_weighted_l1(&inst, &[1.0, 100.0, 1.0, 100.0], &SolverSettings::default())
        .map_err(|e| e.to_string())?;
    let feas = inst.infeasibility(&sol.primal.x);
    check(
        (sol.objective - 0.75).abs() <= 1e-4 && feas <= 1e-7,
        format!("objective {:.8}, infeasibility {feas:.1e}", sol.objective),
    )
}

fn c3_oracle() -> Outcome {
    let r = l0_min(&Instance::example1(), None, &SolverSettings::default()).map_err(|e| e.to_string())?;
    // {1,3} and {3,4} (1-based) are both feasible 2-supports; lexicographic order reports {1,3}
    let has = r.minimal_supports.contains(&vec![2, 3]);
    check(
        r.min_card == Some(2) && has,
        format!(
            "k_star {:?}, {{3,4}} among minimal supports: {has}, lexicographic witness {:?}",
            r.min_card,
            r.witness.map(|w| w.iter().map(|i| i + 1).collect::<Vec<_>>())
        ),
    )
}

fn random_weights(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

fn c4_c5_duality() -> (Outcome, Outcome) {
    let settings = SolverSettings {
        tol: 1e-12,
        ..SolverSettings::default()
    };
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (mut worst_gap, mut worst_kkt, mut worst_comp) = (0.0f64, 0.0f64, 0.0f64);
    let mut support_ok = true;
    for i in 0..100u64 {
        let k = 1 + (i as usize % 5);
        let g = match generate_instance(Dims { m: 10, n: 30, l: 5 }, k, 1e-4, 1000 + i, true) {
            Ok(g) => g,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        let w = random_weights(&mut rng, 30);
        let sol = match solve_weighted_l1(&g.instance, &w, &settings) {
            Ok(s) => s,
            Err(e) => {
                let m = format!("instance {i}: {e}");
                return (Err(m.clone()), Err(m));
            }
        };
        let z = sol.objective;
        worst_gap = worst_gap.max((z - sol.dual_objective).abs() / (1.0 + z.abs()));
        worst_kkt = worst_kkt.max(kkt_check(&g.instance, &w, &sol.primal, &sol.dual).max_residual);
        let c = complementarity_gap(&sol.primal.x, &sol.dual.lam6).expect("lengths match");
        worst_comp = worst_comp.max(c.gap / (1.0 + norm_inf(&w)));
        support_ok &= c.within_bound();
    }
    (
        check(
            worst_gap <= 1e-5 && worst_kkt <= 1e-5,
            format!("worst relative gap {worst_gap:.1e}, worst KKT residual {worst_kkt:.1e}"),
        ),
        check(
            worst_comp <= 1e-5 && support_ok,
            format!("worst max|x_i|lam6_i / scale {worst_comp:.1e}, support bound held: {support_ok}"),
        ),
    )
}

fn c6_strict_pair() -> Outcome {
    let inst = Instance::example1();
    let w = [100.0, 100.0, 1.0, 1.0];
    let s = SolverSettings::default();
    let sp = strict_pair_construct(&inst, &w, &s).map_err(|e| e.to_string())?;
    let cp = strict_pair_central_path(&inst, &w, &s).map_err(|e| e.to_string())?;
    let ok = sp.is_strict()
        && cp.is_strict()
        && sp.p_star == [2, 3]
        && sp.q_star == [0, 1]
        && cp.p_star == sp.p_star
        && cp.q_star == sp.q_star;
    check(
        ok,
        format!(
            "min(t+lam6) {:.3e} > {:.1e}, P* {:?}, Q* {:?} (1-based), constructions agree: {}",
            sp.min_sum,
            sp.strict_tol,
            sp.p_star.iter().map(|i| i + 1).collect::<Vec<_>>(),
            sp.q_star.iter().map(|i| i + 1).collect::<Vec<_>>(),
            cp.p_star == sp.p_star && cp.q_star == sp.q_star
        ),
    )
}

const FAMILIES: [MeritFamily; 4] = [
    MeritFamily::Log,
    MeritFamily::Fraction,
    MeritFamily::Power,
    MeritFamily::Arctan,
];

fn c7_merit() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut fails = Vec::new();
    let pts: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            (0..6)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(1e-3..10.0) })
                .collect()
        })
        .collect();
    for fam in FAMILIES {
        // P1: distance to ||s||_0 shrinks along a decreasing parameter sequence
        for s in &pts {
            let l0 = s.iter().filter(|v| **v != 0.0).count() as f64;
            let mut last = f64::INFINITY;
            for e in [1e-1, 1e-2, 1e-4, 1e-8, 1e-16, 1e-64, 1e-300] {
                let m = MeritFunction::new(fam, e).unwrap();
                let d = (merit_value(&m, s).unwrap() - l0).abs();
                if d > last + 1e-12 {
                    fails.push(format!("{fam:?} P1 not monotone at {e}"));
                }
                last = d;
            }
            // LOG only approaches ||s||_0 like sum |log s_i| / |log eps|
            let rate: f64 = s.iter().filter(|v| **v > 0.0).map(|v| v.ln().abs()).sum();
            if last > 1e-2 * (1.0 + rate) {
                fails.push(format!("{fam:?} P1 limit {last:.1e}"));
            }
        }
        for e in [0.5, 0.1, 1e-2, 1e-3] {
            let m = MeritFunction::new(fam, e).unwrap();
            for pair in pts.windows(2) {
                let th: f64 = rng.random();
                let mid: Vec<f64> =
                    pair[0].iter().zip(&pair[1]).map(|(a, b)| th * a + (1.0 - th) * b).collect();
                let lhs = merit_value(&m, &mid).unwrap();
                let rhs = th * merit_value(&m, &pair[0]).unwrap()
                    + (1.0 - th) * merit_value(&m, &pair[1]).unwrap();
                if lhs < rhs - 1e-10 {
                    fails.push(format!("{fam:?} concavity at eps {e}"));
                }
                if merit_gradient(&m, &pair[0]).unwrap().iter().any(|g| !(*g > 0.0)) {
                    fails.push(format!("{fam:?} monotonicity at eps {e}"));
                }
            }
            for _ in 0..200 {
                let s: f64 = rng.random_range(1e-2..10.0);
                let h = 1e-6 * s.max(1.0);
                let fd = (m.phi(s + h) - m.phi(s - h)) / (2.0 * h);
                let g = m.dphi(s);
                if (fd - g).abs() > 1e-5 * g.abs().max(1.0) {
                    fails.push(format!("{fam:?} gradient at s={s:.3}, eps {e}: {fd} vs {g}"));
                }
            }
        }
    }
    fails.dedup();
    if fails.is_empty() {
        Ok("P1 limit, concavity, monotonicity, gradient checks for LOG/FRACTION/POWER/ARCTAN".into())
    } else {
        Err(fails[..fails.len().min(5)].join("; "))
    }
}

fn c8_conic_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let g = generate_instance(Dims { m: 10, n: 30, l: 5 }, 3, 1e-4, 800 + i, true)
            .map_err(|e| e.to_string())?;
        for v in [Variant::DdaI, Variant::DdaII, Variant::DdaIII] {
            let cfg = AlgorithmConfig::defaults(v);
            let dc = cfg.density_config(v.density_kind().expect("one-step variant"));
            let a = solve_density(&g.instance, &dc, None, &cfg.solver).map_err(|e| e.to_string())?;
            let b = solve_nonconic(&g.instance, &dc, None, &cfg.solver).map_err(|e| e.to_string())?;
            let d = (a.objective - b.objective).abs();
            if d > 1e-4 {
                return Err(format!("instance {i} {v}: exact {} vs linearized {}", a.objective, b.objective));
            }
            worst = worst.max(d);
        }
    }
    Ok(format!("20 instances x DDA I-III, worst objective difference {worst:.1e}"))
}

fn spec(case: Case, lo: usize, hi: usize, trials: usize, algs: &[&str], seed: u64) -> SweepSpec {
    SweepSpec {
        case,
        sparsity_min: lo,
        sparsity_max: hi,
        trials,
        eps_noise: 1e-4,
        algorithms: algs.iter().map(|a| a.parse::<AlgorithmSpec>().unwrap()).collect(),
        seed,
        reject_large_c1: false,
        timing: false,
        threads: None,
    }
}

fn c9_recovery_sweep() -> Outcome {
    let trials = std::env::var("SPARSEKIT_ACCEPTANCE_TRIALS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(50);
    let s = spec(Case::N1, 14, 20, trials, &["l1", "dra4", "dra6", "dra6:k=1"], 2024);
    let r = run_sweep(&s).map_err(|e| e.to_string())?;
    let mean = |a: &str| r.mean_rate(a).unwrap_or(0.0);
    let (l1, d4, d6) = (mean("l1"), mean("dra4"), mean("dra6"));
    let ordered = (14..=20).all(|k| r.rate("dra6", k).unwrap_or(0.0) >= r.rate("dra6:k=1", k).unwrap_or(1.0));
    check(
        d4 >= l1 + 0.10 && d6 >= l1 + 0.10 && ordered,
        format!(
            "{trials} trials: mean rate l1 {l1:.3}, DRA(IV) {d4:.3}, DRA(VI) {d6:.3}, DRA(VI) k=1 {:.3}; k=5 >= k=1 at every level: {ordered}",
            mean("dra6:k=1")
        ),
    )
}

fn c10_oracle_dominance() -> Outcome {
    let settings = SolverSettings::default();
    let (mut sum_l1, mut sum_d6) = (0usize, 0usize);
    for i in 0..50u64 {
        let k = 1 + (i as usize % 3);
        let g = generate_instance(Dims { m: 5, n: 10, l: 3 }, k, 1e-3, 100 + i, true)
            .map_err(|e| e.to_string())?;
        let k_star = l0_min(&g.instance, None, &settings)
            .map_err(|e| e.to_string())?
            .min_card
            .ok_or("instance without feasible support")?;
        for v in Variant::ALL {
            let t = run_algorithm(&g.instance, &AlgorithmConfig::defaults(v)).map_err(|e| format!("{v}: {e}"))?;
            if t.final_sparsity < k_star {
                return Err(format!("instance {i}: {v} sparsity {} < k_star {k_star}", t.final_sparsity));
            }
            match v {
                Variant::L1 => sum_l1 += t.final_sparsity,
                Variant::DraVI => sum_d6 += t.final_sparsity,
                _ => {}
            }
        }
    }
    let (ml1, md6) = (sum_l1 as f64 / 50.0, sum_d6 as f64 / 50.0);
    check(
        md6 <= ml1,
        format!("all 13 variants >= k_star; mean sparsity DRA(VI) {md6:.2} vs l1 {ml1:.2}"),
    )
}

fn c11_determinism() -> Outcome {
    let s = spec(Case::Custom { m: 20, n: 60, l: 5 }, 2, 5, 4, &["l1", "dra6:k=2", "cwb"], 11);
    let csv = |s: &SweepSpec| -> Result<Vec<u8>, String> {
        let r = run_sweep(s).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let a = csv(&s)?;
    let b = csv(&s)?;
    check(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

fn main() {
    // libtest flags (e.g. --nocapture) are accepted and ignored; a filter argument is not supported
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut push = |n: usize, name: &'static str, o: Outcome| {
        let line = match &o {
            Ok(m) => format!("criterion {n:>2} PASS  {name}: {m}"),
            Err(m) => format!("criterion {n:>2} FAIL  {name}: {m}"),
        };
        println!("{line}");
        results.push((n, name, o));
    };
    push(1, "example 1 recovery", guarded(c1_example1_recovery));
    push(2, "example 1 second weight", guarded(c2_second_weight));
    push(3, "l0 oracle on example 1", guarded(c3_oracle));
    let (c4, c5) = catch_unwind(c4_c5_duality).unwrap_or_else(|_| {
        (Err("panicked".into()), Err("panicked".into()))
    });
    push(4, "strong duality and KKT", c4);
    push(5, "complementarity", c5);
    push(6, "strict pair on example 1", guarded(c6_strict_pair));
    push(7, "merit properties", guarded(c7_merit));
    push(8, "exact vs linearized density programs", guarded(c8_conic_equivalence));
    push(9, "N1 recovery-rate sweep", guarded(c9_recovery_sweep));
    push(10, "oracle dominance", guarded(c10_oracle_dominance));
    push(11, "sweep determinism", guarded(c11_determinism));
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
