use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torquesplit::conic::{SolveStatus, Tolerances};
use torquesplit::fixtures;
use torquesplit::poly::exact_monotone_check;
use torquesplit::sos::*;
use torquesplit::Polynomial;

fn dataset(xs: &[f64], f: impl Fn(f64) -> f64) -> FitDataset {
    FitDataset::new(xs.iter().map(|&x| (x, f(x)))).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn noisy_degree5_curve_unconstrained_rmse_below_noise() {
    let curve = Polynomial::new(vec![10.0, 2.0, 0.3, 0.05, 0.004, 1e-4]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let amp = 2.0;
    let data = FitDataset::new(
        linspace(0.0, 10.0, 50)
            .into_iter()
            .map(|x| (x, curve.eval(x) + rng.gen_range(-amp..amp))),
    )
    .unwrap();
    let rep = fit_unconstrained(&data, 10).unwrap();
    let sigma = amp / 3f64.sqrt();
    assert!(rep.rmse <= sigma, "rmse {} vs noise σ {sigma}", rep.rmse);
    assert!(!rep.constrained);
}

#[test]
fn exact_cubic_recovered_by_pseudoconvex_fit() {
    let data = dataset(&linspace(0.0, 4.0, 41), |x| x * x * x + x + 1.0);
    let rep = fit_pseudoconvex(&data, 3, DEFAULT_EPSILON).unwrap();
    assert_eq!(rep.solver_status, SolveStatus::Optimal);
    for (c, e) in rep.polynomial.coeffs().iter().zip([1.0, 1.0, 0.0, 1.0]) {
        assert!((c - e).abs() <= 1e-4, "{:?}", rep.polynomial.coeffs());
    }
    assert!(rep.min_derivative_on_range >= 1.0 - 1e-4);
}

#[test]
fn sparse_data_high_degree_stays_monotone() {
    let xs = [0.0, 10.0, 25.0, 40.0, 70.0, 100.0, 140.0, 200.0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = FitDataset::new(
        xs.iter()
            .map(|&x| (x, 100.0 + 0.8 * x + 0.01 * x * x + rng.gen_range(-8.0..8.0))),
    )
    .unwrap();
    let pp = fit_pseudoconvex(&data, 11, DEFAULT_EPSILON).unwrap();
    let check = exact_monotone_check(&pp.polynomial, 0.0, 200.0).unwrap();
    assert!(check.monotone_nondecreasing, "min p' {}", check.min_derivative);
    assert!(check.min_derivative >= DEFAULT_EPSILON - 1e-6);
    let up = fit_unconstrained(&data, 11).unwrap();
    let cu = exact_monotone_check(&up.polynomial, 0.0, 200.0).unwrap();
    assert!(!cu.monotone_nondecreasing, "interpolant should oscillate");
}

#[test]
fn local_dip_fit_is_monotone_and_close_to_unconstrained() {
    let data = FitDataset::new(fixtures::dip_samples()).unwrap();
    let up = fit_unconstrained(&data, 10).unwrap();
    let pp = fit_pseudoconvex(&data, 10, DEFAULT_EPSILON).unwrap();
    assert!(!up.monotone_on_range);
    assert!(pp.monotone_on_range);
    assert!(pp.rmse <= 1.2 * up.rmse, "PP {} UP {}", pp.rmse, up.rmse);
}

#[test]
fn fit_json_form() {
    let data = FitDataset::from_csv_str("torque_nm,loss_w\n0,1\n1,3\n2,5\n", "d.csv").unwrap();
    let rep = fit_pseudoconvex(&data, 1, DEFAULT_EPSILON).unwrap();
    let v = serde_json::to_value(rep.to_fit_json()).unwrap();
    for key in ["degree", "coeffs", "rmse", "min_derivative", "status", "epsilon", "x_scale", "y_scale"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 2);
    assert!(matches!(
        FitDataset::from_csv_str("torque_nm,loss_w\n0,1\n1,x\n", "d.csv"),
        Err(torquesplit::Error::Parse { line: 3, .. })
    ));
}

/// Monotone data: positive base plus increasing terms and bounded noise.
fn monotone_samples() -> impl Strategy<Value = (Vec<(f64, f64)>, usize)> {
    (
        1.0f64..200.0,
        0.01f64..3.0,
        0.0f64..0.05,
        0.0f64..1e-4,
        0.0f64..0.03,
        any::<u64>(),
        prop::sample::select(vec![2usize, 3, 4, 5, 7, 10]),
    )
        .prop_map(|(c0, c1, c2, c3, noise, seed, deg)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = linspace(0.0, 150.0, 40)
                .into_iter()
                .map(|x| {
                    let y = c0 + c1 * x + c2 * x * x + c3 * x * x * x;
                    (x, y * (1.0 + noise * rng.gen_range(-1.0..1.0)))
                })
                .collect();
            (pts, deg)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pseudoconvex_fit_invariants((pts, deg) in monotone_samples()) {
        let data = FitDataset::new(pts).unwrap();
        let eps = DEFAULT_EPSILON;
        let pos_tol = data.default_pos_tol();
        let program = build_sos_program(&data, deg, eps).unwrap();
        let sol = solve_sos(&program, &Tolerances::default()).unwrap();
        let p = &sol.polynomial;
        let dp = p.derivative();
        let xmax = data.max_x();

        // monotone with margin ε on the data range
        let chk = exact_monotone_check(p, 0.0, xmax).unwrap();
        prop_assert!(chk.monotone_nondecreasing);
        prop_assert!(chk.min_derivative >= eps - 1e-6 * chk.max_abs_derivative.max(1.0),
            "min p' {}", chk.min_derivative);

        // positivity at zero torque
        prop_assert!(p.eval(0.0) >= pos_tol - 1e-9 * (1.0 + pos_tol), "p(0) {} posTol {pos_tol}", p.eval(0.0));

        // Gram blocks are PSD
        prop_assert!(sol.t_gram.min_eigenvalue() >= -1e-9 * (1.0 + sol.t_gram.entries.abs().max()));
        if let Some(s) = &sol.s_gram {
            prop_assert!(s.min_eigenvalue() >= -1e-9 * (1.0 + s.entries.abs().max()));
        }

        // matching identity p′ − ε = t + x·s on a dense grid
        let t = sol.t_gram.polynomial();
        let s = sol.s_gram.as_ref().map(|g| g.polynomial()).unwrap_or_default();
        let grid = linspace(0.0, xmax, 500);
        let max_dp = grid.iter().map(|&x| dp.eval(x).abs()).fold(0.0, f64::max);
        for &x in &grid {
            let r = dp.eval(x) - eps - t.eval(x) - x * s.eval(x);
            prop_assert!(r.abs() <= 1e-6 * (1.0 + max_dp), "residual {r} at {x}");
        }

        // the constrained set is a subset of the unconstrained one
        let up = fit_unconstrained(&data, deg).unwrap();
        let pp_rmse = data.rmse(p);
        prop_assert!(up.rmse <= pp_rmse + 1e-9 * (1.0 + pp_rmse), "UP {} PP {}", up.rmse, pp_rmse);
    }
}
