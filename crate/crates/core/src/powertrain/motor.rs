use serde::{Deserialize, Serialize};

use super::lossmap::LossMap;
use super::model::LossModel;
use crate::error::{Error, Result};

/// Anything that yields `P_loss(ω_m, |τ_m|)`.
pub trait LossSource {
    fn loss(&self, omega_m: f64, tau_m: f64) -> Result<f64>;
}

impl LossSource for LossMap {
    fn loss(&self, omega_m: f64, tau_m: f64) -> Result<f64> {
        self.interpolate(omega_m, tau_m)
    }
}

impl LossSource for LossModel {
    fn loss(&self, omega_m: f64, tau_m: f64) -> Result<f64> {
        LossModel::loss(self, omega_m, tau_m)
    }
}

/// Piecewise-linear `(ω_m, τ_max)` curve, held constant outside its range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorqueCurve {
    points: Vec<(f64, f64)>,
}

impl TorqueCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("torque curve needs at least one point".into()));
        }
        if points.iter().any(|&(w, t)| !w.is_finite() || !(t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("torque curve values must be finite, τ_max ≥ 0".into()));
        }
        if points.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(Error::InvalidArgument("torque curve speeds must be strictly ascending".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn max_torque(&self, omega_m: f64) -> f64 {
        let p = &self.points;
        let k = p.partition_point(|q| q.0 <= omega_m);
        if k == 0 {
            return p[0].1;
        }
        if k == p.len() {
            return p[k - 1].1;
        }
        let (w0, t0) = p[k - 1];
        let (w1, t1) = p[k];
        t0 + (omega_m - w0) / (w1 - w0) * (t1 - t0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    pub label: String,
    pub gear_ratio: f64,
    pub loss_map: LossMap,
    #[serde(default)]
    pub max_torque_curve: Option<TorqueCurve>,
}

impl MotorSpec {
    pub fn new(label: impl Into<String>, gear_ratio: f64, loss_map: LossMap) -> Result<Self> {
        if !(gear_ratio > 0.0 && gear_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("gear ratio must be positive, got {gear_ratio}")));
        }
        Ok(Self {
            label: label.into(),
            gear_ratio,
            loss_map,
            max_torque_curve: None,
        })
    }

    pub fn with_torque_curve(mut self, curve: TorqueCurve) -> Self {
        self.max_torque_curve = Some(curve);
        self
    }

    pub fn motor_speed(&self, omega_w: f64) -> f64 {
        self.gear_ratio * omega_w
    }

    /// Torque limit at motor speed: the curve if present, capped by the map.
    pub fn torque_limit(&self, omega_m: f64) -> f64 {
        let map_max = self.loss_map.max_torque();
        match &self.max_torque_curve {
            Some(c) => c.max_torque(omega_m).min(map_max),
            None => map_max,
        }
    }
}

/// `ω_m·τ_m + P_loss(ω_m, |τ_m|)`; negative under net regeneration.
pub fn motor_electric_power<S: LossSource + ?Sized>(source: &S, omega_m: f64, tau_m: f64) -> Result<f64> {
    Ok(omega_m * tau_m + source.loss(omega_m, tau_m)?)
}
