use proptest::prelude::*;
use torquesplit::conic::Tolerances;
use torquesplit::poly::*;
use torquesplit::sos::sos_feasible_global;
use torquesplit::Polynomial;

fn mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let (x, y) = (a.coeffs(), b.coeffs());
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, &u) in x.iter().enumerate() {
        for (j, &v) in y.iter().enumerate() {
            out[i + j] += u * v;
        }
    }
    Polynomial::new(out)
}

/// Up to 12 roots in [0, 10], pairwise at least 0.5 apart.
fn planted() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..=20, 1..=12)
        .prop_flat_map(|slots| {
            let n = slots.len();
            (Just(slots), prop::collection::vec(-0.1f64..0.1, n))
        })
        .prop_map(|(slots, jitter)| {
            slots
                .into_iter()
                .zip(jitter)
                .map(|(s, j)| (s as f64 * 0.5 + j).clamp(0.0, 10.0))
                .collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recovers_planted_roots(roots in planted(), lead in prop::sample::select(vec![-3.0, 1e-3, 1.0, 250.0])) {
        let p = mul(&Polynomial::from_roots(&roots), &Polynomial::constant(lead));
        let found = real_roots(&p, -1.0, 11.0, &RootOptions::default()).unwrap();
        prop_assert_eq!(found.len(), roots.len(), "planted {:?} found {:?}", roots, found);
        for (f, r) in found.iter().zip(&roots) {
            prop_assert!((f - r).abs() <= 1e-6 * (1.0 + r.abs()), "planted {:?} found {:?}", roots, found);
        }
    }

    #[test]
    fn complex_factors_add_no_roots(roots in planted(), b in 0.1f64..4.0) {
        prop_assume!(roots.len() <= 10);
        // (x − 5)² + b² has no real roots
        let q = Polynomial::new(vec![25.0 + b * b, -10.0, 1.0]);
        let p = mul(&Polynomial::from_roots(&roots), &q);
        let found = real_roots(&p, -1.0, 11.0, &RootOptions::default()).unwrap();
        prop_assert_eq!(found.len(), roots.len(), "planted {:?} found {:?}", roots, found);
    }

    #[test]
    fn cubic_conditions_match_global_sos(a in -2.0f64..2.0, b in -3.0f64..3.0, c in -2.0f64..2.0, d in -5.0f64..5.0) {
        prop_assume!(a.abs() > 1e-2);
        let margin = 3.0 * a * c - b * b;
        prop_assume!(margin.abs() > 1e-3 && c.abs() > 1e-3);
        let p = Polynomial::new(vec![d, c, b, a]);
        let cond = cubic_monotone_conditions(&p).unwrap();
        let sos = sos_feasible_global(&p.derivative(), &Tolerances::default()).unwrap();
        prop_assert_eq!(cond.holds, sos.feasible, "p = {:?}, margin {}", p.coeffs(), margin);
        prop_assert!((cond.margin - margin).abs() <= 1e-12 * (1.0 + margin.abs()));
    }
}

#[test]
fn double_root_reported_once() {
    let p = Polynomial::from_roots(&[1.0, 3.0, 3.0, 7.0]);
    let found = real_roots(&p, 0.0, 10.0, &RootOptions::default()).unwrap();
    assert_eq!(found.len(), 3, "{found:?}");
    assert!((found[1] - 3.0).abs() < 1e-6);
}

#[test]
fn half_line_monotone_cubic_fails_global_conditions() {
    let p = Polynomial::new(vec![0.0, 1.0, 3.0, 1.0]);
    assert!(!cubic_monotone_conditions(&p).unwrap().holds);
    assert!(exact_monotone_check(&p, 0.0, 1e3).unwrap().monotone_nondecreasing);
}

#[test]
fn non_cubic_rejected() {
    assert!(cubic_monotone_conditions(&Polynomial::new(vec![1.0, 1.0, 1.0])).is_err());
    assert!(real_roots(&Polynomial::new(vec![1.0, 1.0]), 2.0, 2.0, &RootOptions::default()).is_err());
}
