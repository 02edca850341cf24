use proptest::prelude::*;
use torquesplit::fixtures;
use torquesplit::powertrain::*;

fn demand_energy_balance(cycle: &DriveCycle) -> (f64, f64) {
    let p = VehicleParams::default();
    let d = cycle_torque_demand(&p, cycle, SpeedSampling::Midpoint);
    let ts = cycle.sample_time;
    let wheel: f64 = d.iter().map(|s| s.force * s.v * ts).sum();
    let resist: f64 = d
        .iter()
        .filter(|s| !s.standstill)
        .map(|s| resistive_force(&p, s.v) * s.v * ts)
        .sum();
    (wheel, resist)
}

#[test]
fn kinetic_energy_cancels_over_closed_cycles() {
    for cycle in [
        DriveCycle::synthetic("syn", 600),
        DriveCycle::new("tri", 1.0, vec![0.0, 3.0, 7.5, 12.0, 9.0, 4.0, 1.0, 0.0]).unwrap(),
    ] {
        let (wheel, resist) = demand_energy_balance(&cycle);
        assert!(
            (wheel - resist).abs() <= 1e-6 * resist.abs(),
            "{}: wheel {wheel} resist {resist}",
            cycle.name
        );
    }
}

#[test]
fn constant_cruise_demand() {
    let p = VehicleParams::default();
    let cycle = DriveCycle::new("c", 1.0, vec![20.0; 10]).unwrap();
    for d in cycle_torque_demand(&p, &cycle, SpeedSampling::StepStart) {
        assert!((d.tau_ref - 51.07).abs() < 0.01, "{}", d.tau_ref);
    }
}

#[test]
fn electric_power_sign() {
    let eq = fixtures::equal_motor(2.0).unwrap();
    let map = &eq.loss_map;
    let l = map.interpolate(100.0, 10.0).unwrap();
    assert_eq!(motor_electric_power(map, 100.0, 10.0).unwrap(), 1000.0 + l);
    assert_eq!(motor_electric_power(map, 100.0, -10.0).unwrap(), -1000.0 + l);
    assert!(motor_electric_power(map, 100.0, 0.0).unwrap() >= 0.0);
}

#[test]
fn pmsm_generator_arithmetic() {
    let kind = SyntheticKind::PmsmLike {
        c0: 100.0,
        c_copper: 0.05,
        c_iron: 0.0,
        c_windage: 0.0,
    };
    let map = generate_synthetic_map(&kind, &[0.0, 250.0, 500.0], &[0.0, 50.0, 100.0]).unwrap();
    for i in 0..3 {
        assert_eq!(map.row(i)[2], 600.0);
    }
    let zero = SyntheticKind::PmsmLike {
        c0: 0.0,
        c_copper: 0.0,
        c_iron: 0.0,
        c_windage: 0.0,
    };
    let z = generate_synthetic_map(&zero, &[0.0, 10.0], &[0.0, 5.0]).unwrap();
    assert!(z.losses().iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn bilinear_midpoints_and_nodes() {
    let map = LossMap::new(vec![0.0, 10.0], vec![0.0, 4.0], vec![vec![1.0, 3.0], vec![5.0, 11.0]]).unwrap();
    assert_eq!(map.interpolate(10.0, 4.0).unwrap(), 11.0);
    assert_eq!(map.interpolate(5.0, 0.0).unwrap(), 3.0);
    assert_eq!(map.interpolate(0.0, 2.0).unwrap(), 2.0);
    assert_eq!(map.interpolate(5.0, 2.0).unwrap(), 5.0);
    assert!(map.interpolate(0.0, 4.05).is_err());
    assert!(map.interpolate(0.0, 4.03).is_ok());
}

#[test]
fn polynomial_generators_round_trip() {
    for kind in [fixtures::type1_kind(), fixtures::type2_kind()] {
        let map = fixtures::polynomial_map(&kind, 10.0).unwrap();
        let model = fit_loss_model(&map, 3, 1e-3, true).unwrap();
        assert_eq!(model.polys.len(), map.speeds().len());
        for (i, &w) in map.speeds().iter().enumerate() {
            let g = kind.slice(w);
            let n = map.torques().len() as f64;
            let rmse = (map
                .torques()
                .iter()
                .map(|&t| (model.polys[i].eval(t) - g.eval(t)).powi(2))
                .sum::<f64>()
                / n)
                .sqrt();
            assert!(rmse <= 1e-4, "ω {w}: rmse {rmse}");
        }
    }
}

#[test]
fn noisy_slice_stays_monotone_and_count_matches() {
    let map = fixtures::noisy_map(3).unwrap();
    let model = fit_loss_model(&map, 10, 1e-3, true).unwrap();
    assert_eq!(model.polys.len(), 50);
    assert!(model.polys.iter().all(|p| p.coeffs().len() == 11));
    for c in model.check_slices().unwrap() {
        assert!(c.ok(), "slice {} min p' {}", c.index, c.min_derivative);
    }
}

#[test]
fn blended_model_is_monotone_in_torque() {
    let model = fit_loss_model(&fixtures::noisy_map(3).unwrap(), 10, 1e-3, true).unwrap();
    let tmax = model.torque_range.1;
    for pair in model.speeds.windows(2) {
        for frac in [0.25, 0.5, 0.9] {
            let w = pair[0] + frac * (pair[1] - pair[0]);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..1000 {
                let l = model.loss(w, tmax * k as f64 / 999.0).unwrap();
                assert!(l >= prev - 1e-9 * l.abs().max(1.0), "ω {w} step {k}: {l} < {prev}");
                prev = l;
            }
        }
    }
}

#[test]
fn blend_on_slice_and_between_identical_slices() {
    let map = fixtures::polynomial_map(&fixtures::convex_kind(0.02), 10.0).unwrap();
    let model = fit_loss_model(&map, 2, 1e-3, true).unwrap();
    let w = model.speeds[4];
    assert_eq!(model.loss(w, 33.0).unwrap(), model.polys[4].eval(33.0));
    let mut flat = model.clone();
    flat.polys[5] = flat.polys[4].clone();
    let mid = 0.5 * (flat.speeds[4] + flat.speeds[5]);
    let (a, b) = (flat.loss(mid, 33.0).unwrap(), flat.polys[4].eval(33.0));
    assert!((a - b).abs() <= 1e-12 * b);
}

proptest! {
    #[test]
    fn resistive_force_increasing(v in 0.01f64..60.0, dv in 1e-3f64..10.0) {
        let p = VehicleParams::default();
        prop_assert!(resistive_force(&p, v + dv) > resistive_force(&p, v));
    }

    #[test]
    fn torque_sign_symmetry(w in 0.0f64..720.0, t in 0.0f64..250.0) {
        let map = fixtures::polynomial_map(&fixtures::type2_kind(), 10.0).unwrap();
        prop_assert_eq!(map.interpolate(w, t).unwrap(), map.interpolate(w, -t).unwrap());
        let model = fit_loss_model(&map, 3, 1e-3, false).unwrap();
        prop_assert_eq!(model.loss(w, t).unwrap(), model.loss(w, -t).unwrap());
    }

    #[test]
    fn energy_is_linear(ps in prop::collection::vec(-5e4f64..5e4, 1..200), c in -4.0f64..4.0) {
        let scaled: Vec<f64> = ps.iter().map(|p| c * p).collect();
        let (e, ec) = (total_energy(&ps, 1.0), total_energy(&scaled, 1.0));
        let mag: f64 = ps.iter().map(|p| p.abs()).sum::<f64>() / 3.6e6;
        prop_assert!((ec - c * e).abs() <= 1e-12 * (1.0 + c.abs() * mag));
    }
}
