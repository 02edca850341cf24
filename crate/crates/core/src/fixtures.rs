//! Synthetic motors and datasets shared by tests, examples and the CLI.
//!
//! Two motor types stand in for the measured maps: type 1 on the lower gear
//! ratio and type 2 on the higher one. Both have cubic torque dependence with
//! an inflection, which produces the concave low-torque region behind the
//! switching behavior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::powertrain::{generate_synthetic_map, map_from_slices, uniform_grid, LossMap, MotorSpec, SyntheticKind, VehicleParams};

pub fn type1_kind() -> SyntheticKind {
    SyntheticKind::CubicInflection {
        c0: 150.0,
        c_iron: 0.4,
        c_windage: 2e-7,
        a1: 0.5,
        a1_speed: 1e-3,
        a2: 6e-3,
        a3: 1e-4,
    }
}

pub fn type2_kind() -> SyntheticKind {
    SyntheticKind::CubicInflection {
        c0: 100.0,
        c_iron: 0.25,
        c_windage: 1e-7,
        a1: 0.4,
        a1_speed: 5e-4,
        a2: 4e-3,
        a3: 6e-5,
    }
}

/// Convex `PMSM_LIKE` losses.
pub fn convex_kind(c_copper: f64) -> SyntheticKind {
    SyntheticKind::PmsmLike {
        c0: 120.0,
        c_copper,
        c_iron: 0.3,
        c_windage: 1.5e-7,
    }
}

/// Motor speed grid covering the fixture cycles on both gear ratios.
pub fn speed_grid() -> Vec<f64> {
    uniform_grid(0.0, 720.0, 10.0)
}

pub fn torque_grid(step: f64) -> Vec<f64> {
    uniform_grid(0.0, 250.0, step)
}

pub fn motor(kind: &SyntheticKind, label: &str, gear_ratio: f64, torque_step: f64) -> Result<MotorSpec> {
    let map = generate_synthetic_map(kind, &speed_grid(), &torque_grid(torque_step))?;
    MotorSpec::new(label, gear_ratio, map)
}

/// `(front, rear)` for the unequal configuration: type 1 front, type 2 rear.
pub fn unequal_pair(torque_step: f64) -> Result<(MotorSpec, MotorSpec)> {
    let v = VehicleParams::default();
    Ok((
        motor(&type1_kind(), "type1", v.h1, torque_step)?,
        motor(&type2_kind(), "type2", v.h2, torque_step)?,
    ))
}

/// Type 1 on both axles.
pub fn equal_motor(torque_step: f64) -> Result<MotorSpec> {
    motor(&type1_kind(), "type1", VehicleParams::default().h1, torque_step)
}

/// Multiplies every loss by an independent uniform factor in `1 ± rel`.
pub fn perturb(map: &LossMap, rel: f64, seed: u64) -> Result<LossMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let losses = map
        .losses()
        .iter()
        .map(|row| row.iter().map(|&p| p * (1.0 + rel * rng.gen_range(-1.0..=1.0))).collect())
        .collect();
    LossMap::new(map.speeds().to_vec(), map.torques().to_vec(), losses)
}

/// 50 slices of a convex map with multiplicative uniform ±5% noise, plus a
/// local dip at low torque planted in slice 17.
pub fn noisy_map(seed: u64) -> Result<LossMap> {
    let kind = convex_kind(0.02);
    let speeds = uniform_grid(0.0, 490.0, 10.0);
    let torques = uniform_grid(0.0, 200.0, 4.0);
    let losses = speeds
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            torques
                .iter()
                .map(|&t| kind.eval(w, t) + if i == 17 { dip(t) } else { 0.0 })
                .collect()
        })
        .collect();
    perturb(&LossMap::new(speeds, torques, losses)?, 0.05, seed)
}

/// Smooth bump that makes the losses decrease locally around 30 N·m.
pub fn dip(t: f64) -> f64 {
    -60.0 * (-((t - 30.0) / 8.0).powi(2)).exp() + 60.0 * (-((t - 18.0) / 8.0).powi(2)).exp()
}

/// Clean, monotone, non-polynomial slice: saturating magnetization term on
/// top of a quadratic.
pub fn smooth_slice(omega: f64, t: f64) -> f64 {
    80.0 + 0.2 * omega + 0.6 * t + 0.015 * t * t + 40.0 * (1.0 - (-t / 25.0).exp())
}

/// Map whose slices are exactly the given per-speed polynomials.
pub fn polynomial_map(kind: &SyntheticKind, torque_step: f64) -> Result<LossMap> {
    map_from_slices(&speed_grid(), &torque_grid(torque_step), |w| kind.slice(w))
}

/// Torque/loss samples of the slice used by the dip examples.
pub fn dip_samples() -> Vec<(f64, f64)> {
    uniform_grid(0.0, 200.0, 4.0)
        .into_iter()
        .map(|t| (t, convex_kind(0.02).eval(100.0, t) + dip(t)))
        .collect()
}

