use proptest::prelude::*;
use sparsekit::merit::*;

const CONCAVE: [MeritFamily; 5] = [
    MeritFamily::Log,
    MeritFamily::Fraction,
    MeritFamily::Power,
    MeritFamily::Arctan,
    MeritFamily::CwbLog,
];

fn family() -> impl Strategy<Value = MeritFamily> {
    prop::sample::select(CONCAVE.to_vec())
}

fn merit_eps() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 0.1, 1e-2, 1e-3])
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], n)
}

fn count_nonzero(s: &[f64]) -> f64 {
    s.iter().filter(|v| **v != 0.0).count() as f64
}

#[test]
fn limit_to_l0_is_monotone() {
    let pts = [
        vec![0.0, 1.0, 3.0, 0.0, 0.5],
        vec![2.0, 0.0, 0.0, 0.0, 1e-1],
        vec![0.0; 4],
    ];
    for fam in [MeritFamily::Fraction, MeritFamily::Arctan] {
        for s in &pts {
            let l0 = count_nonzero(s);
            let mut last = f64::INFINITY;
            for e in [1e-2, 1e-4, 1e-8] {
                let m = MeritFunction::new(fam, e).unwrap();
                let d = (merit_value(&m, s).unwrap() - l0).abs();
                assert!(d <= last, "{fam:?} eps {e}: {d} > {last}");
                last = d;
            }
            assert!(last < 1e-6, "{fam:?} {s:?}: {last}");
        }
    }
}

#[test]
fn negative_argument_is_domain_error() {
    let m = MeritFunction::fraction(0.1).unwrap();
    assert!(merit_value(&m, &[1.0, -1e-3]).is_err());
    assert!(merit_gradient(&m, &[-1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn merit_is_concave(fam in family(), e in merit_eps(), a in point(6), b in point(6), th in 0.0..1.0f64) {
        let m = MeritFunction::new(fam, e).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| th * x + (1.0 - th) * y).collect();
        let lhs = merit_value(&m, &mid).unwrap();
        let rhs = th * merit_value(&m, &a).unwrap() + (1.0 - th) * merit_value(&m, &b).unwrap();
        prop_assert!(lhs >= rhs - 1e-10, "{lhs} < {rhs}");
    }

    #[test]
    fn merit_is_increasing(fam in family(), e in merit_eps(), s in point(6)) {
        let m = MeritFunction::new(fam, e).unwrap();
        for g in merit_gradient(&m, &s).unwrap() {
            prop_assert!(g > 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_difference(fam in family(), e in merit_eps(), s in 1e-2..10.0f64) {
        let m = MeritFunction::new(fam, e).unwrap();
        let h = 1e-6 * s.max(1.0);
        let fd = (m.phi(s + h) - m.phi(s - h)) / (2.0 * h);
        let g = m.dphi(s);
        prop_assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "fd {fd} vs {g}");
    }

    #[test]
    fn surrogates_are_convex(
        kind in prop::sample::select(vec![
            SurrogateKind::J1Exp,
            SurrogateKind::J2NegLog,
            SurrogateKind::J3InvPsi,
            SurrogateKind::J4MeanInv,
        ]),
        fam in prop::sample::select(vec![MeritFamily::Log, MeritFamily::Fraction, MeritFamily::Arctan]),
        e in merit_eps(),
        a in point(5),
        b in point(5),
        th in 0.0..1.0f64,
    ) {
        let f = Surrogate::new(kind, 0.1, MeritFunction::new(fam, e).unwrap()).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| th * x + (1.0 - th) * y).collect();
        let lhs = surrogate_value(&f, &mid).unwrap();
        let rhs = th * surrogate_value(&f, &a).unwrap() + (1.0 - th) * surrogate_value(&f, &b).unwrap();
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn surrogate_gradient_matches_finite_difference(
        kind in prop::sample::select(vec![
            SurrogateKind::J1Exp,
            SurrogateKind::J2NegLog,
            SurrogateKind::J3InvPsi,
            SurrogateKind::J4MeanInv,
        ]),
        s in prop::collection::vec(1e-2..5.0f64, 4),
        i in 0usize..4,
    ) {
        let f = Surrogate::new(kind, 0.1, MeritFunction::fraction(0.1).unwrap()).unwrap();
        let g = f.gradient(&s).unwrap();
        let h = 1e-6;
        let mut up = s.clone();
        up[i] += h;
        let mut dn = s.clone();
        dn[i] -= h;
        let fd = (surrogate_value(&f, &up).unwrap() - surrogate_value(&f, &dn).unwrap()) / (2.0 * h);
        prop_assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0), "fd {fd} vs {}", g[i]);
    }
}
