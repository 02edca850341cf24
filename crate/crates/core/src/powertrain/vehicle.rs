use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longitudinal vehicle parameters. Field names follow the usual symbols
/// (`m`, `R`, `R_r`, …) in the JSON form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Mass, kg.
    pub m: f64,
    /// Effective wheel radius, m.
    #[serde(rename = "R")]
    pub r_wheel: f64,
    /// Rolling resistance coefficient.
    #[serde(rename = "R_r")]
    pub r_roll: f64,
    /// Air resistance coefficient.
    #[serde(rename = "C_d")]
    pub c_d: f64,
    /// Frontal area, m².
    #[serde(rename = "A_f")]
    pub a_f: f64,
    /// Air density, kg/m³.
    pub rho_air: f64,
    /// Gravitational constant, m/s².
    pub g: f64,
    /// Gear ratio of motor type 1.
    #[serde(default = "default_h1")]
    pub h1: f64,
    /// Gear ratio of motor type 2.
    #[serde(default = "default_h2")]
    pub h2: f64,
}

fn default_h1() -> f64 {
    4.4863
}

fn default_h2() -> f64 {
    7.425
}

impl Default for VehicleParams {
    /// Modified Chevrolet Volt EREV.
    fn default() -> Self {
        Self {
            m: 2200.0,
            r_wheel: 0.317,
            r_roll: 0.008,
            c_d: 0.275,
            a_f: 2.22,
            rho_air: 1.225,
            g: 9.81,
            h1: default_h1(),
            h2: default_h2(),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m", self.m),
            ("R", self.r_wheel),
            ("R_r", self.r_roll),
            ("C_d", self.c_d),
            ("A_f", self.a_f),
            ("rho_air", self.rho_air),
            ("g", self.g),
            ("h1", self.h1),
            ("h2", self.h2),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "vehicle parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn rolling_force(&self) -> f64 {
        self.r_roll * self.m * self.g
    }

    pub fn aero_force(&self, v: f64) -> f64 {
        0.5 * self.rho_air * self.c_d * self.a_f * v * v
    }
}

/// Rolling plus aerodynamic resistance at speed `v` (m/s), in N.
pub fn resistive_force(params: &VehicleParams, v: f64) -> f64 {
    params.rolling_force() + params.aero_force(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    /// Sample time, s.
    pub sample_time: f64,
    /// Vehicle speed per sample, m/s.
    pub speeds: Vec<f64>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, sample_time: f64, speeds: Vec<f64>) -> Result<Self> {
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample time must be positive, got {sample_time}"
            )));
        }
        if let Some(v) = speeds.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "cycle speeds must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self {
            name: name.into(),
            sample_time,
            speeds,
        })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.sample_time
    }

    /// Reads `t_s,v_mps`. Timestamps must be uniformly spaced; the sample
    /// time is taken from them.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().map_or_else(|| "cycle".to_string(), |s| s.to_string_lossy().into_owned());
        Self::from_csv_str(name, &text, &path.display().to_string())
    }

    pub fn from_csv_str(name: impl Into<String>, text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
        if header.len() != 2 || &header[0] != "t_s" || &header[1] != "v_mps" {
            return Err(perr(1, format!("expected header t_s,v_mps, found {:?}", header.iter().collect::<Vec<_>>())));
        }
        let mut ts = Vec::new();
        let mut speeds = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| perr(line, format!("not a number: {:?}", &rec[i])))
            };
            ts.push((line, num(0)?));
            speeds.push(num(1)?);
        }
        if ts.len() < 2 {
            return Err(perr(0, "a cycle needs at least two samples".into()));
        }
        let dt = ts[1].1 - ts[0].1;
        if !(dt > 0.0) {
            return Err(perr(ts[1].0, "timestamps must increase".into()));
        }
        for (k, &(line, t)) in ts.iter().enumerate() {
            let expected = ts[0].1 + k as f64 * dt;
            if (t - expected).abs() > 1e-6 * dt.max(expected.abs()) {
                return Err(perr(line, format!("non-uniform timestamp {t}, expected {expected}")));
            }
        }
        Self::new(name, dt, speeds)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t_s,v_mps\n");
        for (k, v) in self.speeds.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k as f64 * self.sample_time, v));
        }
        out
    }

    /// Deterministic urban/extra-urban style profile: trapezoidal speed
    /// bumps separated by stops, 1 s sampling, `steps` samples. Only whole
    /// bumps are used; the remainder is spent at rest.
    pub fn synthetic(name: impl Into<String>, steps: usize) -> Self {
        // (cruise speed m/s, accel m/s², decel m/s², cruise s, stop s)
        const PHASES: [(f64, f64, f64, usize, usize); 5] = [
            (8.0, 1.0, 1.2, 12, 6),
            (14.0, 1.4, 1.6, 25, 8),
            (22.0, 1.1, 1.3, 40, 5),
            (30.0, 0.9, 1.0, 60, 10),
            (12.0, 2.0, 2.5, 15, 4),
        ];
        let mut speeds = vec![0.0];
        for &(vc, acc, dec, cruise, stop) in PHASES.iter().cycle() {
            let mut bump = Vec::new();
            let mut v = 0.0_f64;
            while v < vc {
                v = (v + acc).min(vc);
                bump.push(v);
            }
            for k in 0..cruise {
                // gentle ripple so cruising is not perfectly steady
                bump.push(vc + 0.3 * ((k as f64) * 0.7).sin());
            }
            let mut v = vc;
            while v > 0.0 {
                v = (v - dec).max(0.0);
                bump.push(v);
            }
            bump.extend(std::iter::repeat(0.0).take(stop));
            if speeds.len() + bump.len() > steps {
                break;
            }
            speeds.extend(bump);
        }
        speeds.resize(steps, 0.0);
        Self {
            name: name.into(),
            sample_time: 1.0,
            speeds,
        }
    }

    /// Linear ramp from rest to `v_max`, hold, and back to rest.
    pub fn ramp(name: impl Into<String>, v_max: f64, accel: f64, hold: usize) -> Self {
        let mut speeds = vec![0.0];
        let mut v = 0.0_f64;
        while v < v_max {
            v = (v + accel).min(v_max);
            speeds.push(v);
        }
        speeds.extend(std::iter::repeat(v_max).take(hold));
        while v > 0.0 {
            v = (v - accel).max(0.0);
            speeds.push(v);
        }
        Self {
            name: name.into(),
            sample_time: 1.0,
            speeds,
        }
    }
}

/// Which speed the speed-dependent terms of a step are evaluated at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedSampling {
    /// `v_k`, the speed at the start of the step.
    #[default]
    StepStart,
    /// `(v_k + v_{k+1}) / 2`; mechanical energy then telescopes exactly.
    Midpoint,
}

/// Per-step wheel operating point for one vehicle side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WheelDemand {
    pub t: f64,
    /// Speed used for this step, m/s.
    pub v: f64,
    /// Wheel speed, rad/s.
    pub omega_w: f64,
    /// Total traction force, N.
    pub force: f64,
    /// Wheel torque demand for one side (front + rear), N·m.
    pub tau_ref: f64,
    /// True when the vehicle is at rest and rolling resistance was dropped.
    pub standstill: bool,
}

/// Discretized longitudinal dynamics: forward-difference acceleration
/// (`a = 0` on the last sample), total force `m·a + F_res`, and the wheel
/// torque split equally between left and right.
///
/// At standstill (sampled speed 0) the resistive force is zero, so a vehicle
/// at rest demands no torque.
pub fn cycle_torque_demand(
    params: &VehicleParams,
    cycle: &DriveCycle,
    sampling: SpeedSampling,
) -> Vec<WheelDemand> {
    let n = cycle.len();
    let ts = cycle.sample_time;
    (0..n)
        .map(|k| {
            let v_k = cycle.speeds[k];
            let (accel, v_next) = if k + 1 < n {
                let v1 = cycle.speeds[k + 1];
                ((v1 - v_k) / ts, v1)
            } else {
                (0.0, v_k)
            };
            let v = match sampling {
                SpeedSampling::StepStart => v_k,
                SpeedSampling::Midpoint => 0.5 * (v_k + v_next),
            };
            let standstill = v == 0.0;
            let resist = if standstill {
                0.0
            } else {
                resistive_force(params, v)
            };
            let force = params.m * accel + resist;
            WheelDemand {
                t: k as f64 * ts,
                v,
                omega_w: v / params.r_wheel,
                force,
                tau_ref: force * params.r_wheel / 2.0,
                standstill,
            }
        })
        .collect()
}

/// Left-rectangle integral of per-step power (W) in kWh.
pub fn total_energy(powers: &[f64], sample_time: f64) -> f64 {
    powers.iter().sum::<f64>() * sample_time / 3.6e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resistive_force_table_values() {
        let p = VehicleParams::default();
        assert!((resistive_force(&p, 0.0) - 172.656).abs() < 1e-9);
        // 172.656 + 0.5·1.225·0.275·2.22·400
        let expected = 172.656 + 149.5725;
        assert!((resistive_force(&p, 20.0) - expected).abs() < 1e-9);
        let no_roll = VehicleParams {
            r_roll: 0.0,
            ..p
        };
        assert_eq!(resistive_force(&no_roll, 0.0), 0.0);
    }

    #[test]
    fn constant_speed_demand() {
        let p = VehicleParams::default();
        let cycle = DriveCycle::new("const", 1.0, vec![20.0; 5]).unwrap();
        for d in cycle_torque_demand(&p, &cycle, SpeedSampling::StepStart) {
            assert!((d.tau_ref - 322.2285 * 0.317 / 2.0).abs() < 1e-9);
            assert!((d.omega_w - 20.0 / 0.317).abs() < 1e-12);
        }
    }

    #[test]
    fn standstill_demands_nothing() {
        let p = VehicleParams::default();
        let cycle = DriveCycle::new("rest", 1.0, vec![0.0; 4]).unwrap();
        for d in cycle_torque_demand(&p, &cycle, SpeedSampling::StepStart) {
            assert_eq!(d.tau_ref, 0.0);
            assert_eq!(d.omega_w, 0.0);
            assert!(d.standstill);
        }
    }

    #[test]
    fn braking_step_regenerates() {
        let p = VehicleParams::default();
        let cycle = DriveCycle::new("brake", 1.0, vec![20.0, 15.0]).unwrap();
        let d = cycle_torque_demand(&p, &cycle, SpeedSampling::StepStart);
        let expected_force = 2200.0 * -5.0 + resistive_force(&p, 20.0);
        assert!((d[0].force - expected_force).abs() < 1e-9);
        assert!(d[0].tau_ref < 0.0);
        // last sample holds speed
        assert!(d[1].tau_ref > 0.0);
    }

    #[test]
    fn energy_integration() {
        assert_eq!(total_energy(&vec![4000.0; 3600], 1.0), 4.0);
        assert_eq!(total_energy(&[0.0; 10], 1.0), 0.0);
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1000.0 } else { -1000.0 }).collect();
        assert_eq!(total_energy(&alt, 1.0), 0.0);
    }

    #[test]
    fn params_json_uses_symbol_names() {
        let json = serde_json::to_value(VehicleParams::default()).unwrap();
        for key in ["m", "R", "R_r", "C_d", "A_f", "rho_air", "g", "h1", "h2"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn synthetic_cycle_shape() {
        let c = DriveCycle::synthetic("syn", 600);
        assert_eq!(c.len(), 600);
        assert_eq!(c.speeds[0], 0.0);
        assert_eq!(*c.speeds.last().unwrap(), 0.0);
        assert!(c.speeds.iter().filter(|&&v| v > 0.0).count() > 400);
        let max_dv = c.speeds.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_dv <= 2.5);
        assert!(c.speeds.iter().all(|&v| (0.0..=31.0).contains(&v)));
    }

    #[test]
    fn cycle_csv_round_trip_and_errors() {
        let c = DriveCycle::ramp("r", 5.0, 1.0, 3);
        let back = DriveCycle::from_csv_str("r", &c.to_csv_string(), "r.csv").unwrap();
        assert_eq!(back, c);
        let bad = "t_s,v_mps\n0,1\n1,2\n2.5,3\n";
        match DriveCycle::from_csv_str("b", bad, "b.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            DriveCycle::from_csv_str("b", "t_s,v_mps\n0,1\n1,x\n", "b.csv"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
