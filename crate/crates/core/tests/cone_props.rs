use proptest::prelude::*;
use sparsekit::cone::*;
use sparsekit::linalg::{dot, norm2, CsrBuilder};

fn kind() -> impl Strategy<Value = ConeKind> {
    (1usize..6, 0usize..4).prop_map(|(d, k)| match k {
        0 => ConeKind::Zero(d),
        1 => ConeKind::NonNeg(d),
        2 => ConeKind::Soc(d),
        _ => ConeKind::Rsoc(d.max(2)),
    })
}

fn cone_and_vec() -> impl Strategy<Value = (ConeKind, Vec<f64>)> {
    kind().prop_flat_map(|k| (Just(k), prop::collection::vec(-5.0..5.0f64, k.dim())))
}

fn in_cone(k: ConeKind, v: &[f64], tol: f64) -> bool {
    match k {
        ConeKind::Zero(_) => v.iter().all(|x| x.abs() <= tol),
        ConeKind::NonNeg(_) => v.iter().all(|x| *x >= -tol),
        ConeKind::Soc(_) => norm2(&v[1..]) <= v[0] + tol,
        ConeKind::Rsoc(_) => {
            v[0] >= -tol && v[1] >= -tol && dot(&v[2..], &v[2..]) <= 2.0 * v[0] * v[1] + tol
        }
    }
}

/// Projection onto the dual cone; every cone here is self-dual except `Zero`.
fn project_dual(k: ConeKind, v: &[f64]) -> Vec<f64> {
    match k {
        ConeKind::Zero(_) => v.to_vec(),
        _ => project_cone(k, v).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn projection_lands_in_cone_and_is_idempotent((k, v) in cone_and_vec()) {
        let p = project_cone(k, &v).unwrap();
        prop_assert!(in_cone(k, &p, 1e-9));
        let q = project_cone(k, &p).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn moreau_decomposition((k, v) in cone_and_vec()) {
        // v = P_K(v) - P_K*(-v) with the two parts orthogonal
        let p = project_cone(k, &v).unwrap();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let d = project_dual(k, &neg);
        for i in 0..v.len() {
            prop_assert!((v[i] - (p[i] - d[i])).abs() <= 1e-8 * (1.0 + v[i].abs()));
        }
        prop_assert!(dot(&p, &d).abs() <= 1e-8 * (1.0 + dot(&v, &v)));
    }
}

/// min c'x s.t. A x = A x0, ||x - x0|| <= r, x >= -5, (1, 1, x0_0 - x_0) in Rsoc.
fn random_program(n: usize, seed: &[f64]) -> ConeProgram {
    let m = 2;
    let x0: Vec<f64> = (0..n).map(|i| seed[i % seed.len()] * 0.5).collect();
    let c: Vec<f64> = (0..n).map(|i| seed[(i + 3) % seed.len()]).collect();
    let a: Vec<Vec<f64>> = (0..m)
        .map(|r| (0..n).map(|j| seed[(r * n + j + 5) % seed.len()]).collect())
        .collect();
    let mut g = CsrBuilder::new(n);
    let mut h = Vec::new();
    for row in &a {
        g.push_row(row.iter().copied().enumerate());
        h.push(dot(row, &x0));
    }
    g.push_empty_row();
    h.push(0.8);
    for j in 0..n {
        g.push_row([(j, 1.0)]);
        h.push(x0[j]);
    }
    for j in 0..n {
        g.push_row([(j, -1.0)]);
        h.push(5.0);
    }
    g.push_empty_row();
    g.push_empty_row();
    g.push_row([(0, 1.0)]);
    h.extend([1.0, 1.0, x0[0]]);
    ConeProgram::new(
        c,
        g.finish(),
        h,
        vec![
            ConeKind::Zero(m),
            ConeKind::Soc(n + 1),
            ConeKind::NonNeg(n),
            ConeKind::Rsoc(3),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solver_duality_invariants(
        n in 3usize..7,
        seed in prop::collection::vec(-2.0..2.0f64, 11),
        admm in any::<bool>(),
    ) {
        let p = random_program(n, &seed);
        let backend = if admm { Backend::Admm } else { Backend::InteriorPoint };
        let s = SolverSettings::default().with_backend(backend);
        let r = solve(&p, &s).unwrap();
        prop_assert!(r.is_optimal(), "{:?}", r.status);
        let scale = 1.0 + r.primal_objective.abs();
        prop_assert!(r.primal_objective >= r.dual_objective - 1e-5 * scale);
        for (b, k) in p.cones().iter().enumerate() {
            if matches!(k, ConeKind::Zero(_)) {
                continue;
            }
            let yb = r.dual_block(&p, b);
            prop_assert!(in_cone(*k, yb, 1e-5), "{k:?} {yb:?}");
        }
        let again = solve(&p, &s).unwrap();
        prop_assert_eq!(again.primal, r.primal);
        prop_assert_eq!(again.dual, r.dual);
    }
}

