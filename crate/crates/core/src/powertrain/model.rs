use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lossmap::{bracket, check_torque, clamp_speed, LossMap};
use crate::conic::SolveStatus;
use crate::error::{Error, Result};
use crate::poly::{exact_monotone_check, Polynomial};
use crate::sos::{fit_pseudoconvex, fit_unconstrained, FitDataset, FitReport};

/// How a model is evaluated between speed slices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedBlend {
    /// Linear in ω between the two bracketing slices.
    #[default]
    Linear,
    /// Nearest slice (ties go to the lower speed).
    Nearest,
}

/// Per-slice summary of the fit that produced a polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceFitMeta {
    pub omega: f64,
    pub rmse: f64,
    pub min_derivative: f64,
    pub monotone: bool,
    pub status: SolveStatus,
}

impl SliceFitMeta {
    fn from_report(omega: f64, r: &FitReport) -> Self {
        Self {
            omega,
            rmse: r.rmse,
            min_derivative: r.min_derivative_on_range,
            monotone: r.monotone_on_range,
            status: r.solver_status,
        }
    }
}

/// One loss polynomial in τ per speed slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub speeds: Vec<f64>,
    pub polys: Vec<Polynomial>,
    pub fit_meta: Vec<SliceFitMeta>,
    pub torque_range: (f64, f64),
    pub degree: usize,
    pub epsilon: f64,
    pub constrained: bool,
    #[serde(default)]
    pub blend: SpeedBlend,
}

/// Fits every speed row of `map` in parallel. Any failing slice rejects the
/// whole model; for constrained fits a slice that does not pass the exact
/// monotonicity check on the torque range also counts as failed.
pub fn fit_loss_model(map: &LossMap, degree: usize, epsilon: f64, constrained: bool) -> Result<LossModel> {
    let torques = map.torques();
    let results: Vec<Result<FitReport>> = (0..map.speeds().len())
        .into_par_iter()
        .map(|i| {
            let data = FitDataset::new(torques.iter().copied().zip(map.row(i).iter().copied()))?;
            let rep = if constrained {
                fit_pseudoconvex(&data, degree, epsilon)?
            } else {
                fit_unconstrained(&data, degree)?
            };
            if constrained && !rep.monotone_on_range {
                return Err(Error::NumericalFailure(format!(
                    "certified fit has min derivative {} on range",
                    rep.min_derivative_on_range
                )));
            }
            Ok(rep)
        })
        .collect();
    let mut polys = Vec::with_capacity(results.len());
    let mut fit_meta = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let rep = r.map_err(|e| Error::SliceFitFailed {
            index: i,
            source: Box::new(e),
        })?;
        fit_meta.push(SliceFitMeta::from_report(map.speeds()[i], &rep));
        polys.push(rep.polynomial);
    }
    Ok(LossModel {
        speeds: map.speeds().to_vec(),
        polys,
        fit_meta,
        torque_range: (0.0, map.max_torque()),
        degree,
        epsilon,
        constrained,
        blend: SpeedBlend::Linear,
    })
}

/// Result of re-checking one stored slice polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceCheck {
    pub index: usize,
    pub omega: f64,
    pub value_at_zero: f64,
    pub min_derivative: f64,
    pub monotone: bool,
    pub positive: bool,
}

impl SliceCheck {
    pub fn ok(&self) -> bool {
        self.monotone && self.positive
    }
}

impl LossModel {
    pub fn with_blend(mut self, blend: SpeedBlend) -> Self {
        self.blend = blend;
        self
    }

    pub fn num_coefficients(&self) -> usize {
        self.polys.iter().map(|p| p.coeffs().len()).sum()
    }

    pub fn max_torque(&self) -> f64 {
        self.torque_range.1
    }

    pub fn validate_shape(&self) -> Result<()> {
        if self.speeds.is_empty() || self.speeds.len() != self.polys.len() {
            return Err(Error::InvalidArgument(format!(
                "model has {} speeds and {} polynomials",
                self.speeds.len(),
                self.polys.len()
            )));
        }
        if self.speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("model speeds must be strictly ascending".into()));
        }
        if !(self.torque_range.1 > self.torque_range.0) {
            return Err(Error::InvalidArgument("empty torque range".into()));
        }
        Ok(())
    }

    /// Polynomial in τ at speed `omega` under the configured blend.
    pub fn slice_polynomial(&self, omega: f64) -> Polynomial {
        let w = clamp_speed(omega, &self.speeds);
        let (i0, i1, t) = bracket(&self.speeds, w);
        match self.blend {
            SpeedBlend::Nearest => {
                let k = if t > 0.5 { i1 } else { i0 };
                self.polys[k].clone()
            }
            SpeedBlend::Linear if i0 == i1 => self.polys[i0].clone(),
            SpeedBlend::Linear => &(&self.polys[i0] * (1.0 - t)) + &(&self.polys[i1] * t),
        }
    }

    pub fn loss(&self, omega: f64, tau: f64) -> Result<f64> {
        let t = tau.abs();
        check_torque(t, self.max_torque())?;
        let w = clamp_speed(omega, &self.speeds);
        let (i0, i1, s) = bracket(&self.speeds, w);
        let a = self.polys[i0].eval(t);
        if i0 == i1 {
            return Ok(a);
        }
        let b = self.polys[i1].eval(t);
        Ok(match self.blend {
            SpeedBlend::Nearest if s > 0.5 => b,
            SpeedBlend::Nearest => a,
            SpeedBlend::Linear => (1.0 - s) * a + s * b,
        })
    }

    /// Re-verifies positivity at zero torque and monotonicity on the torque
    /// range for every stored slice.
    pub fn check_slices(&self) -> Result<Vec<SliceCheck>> {
        let (lo, hi) = self.torque_range;
        self.polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let chk = exact_monotone_check(p, lo, hi)?;
                let v0 = p.eval(lo);
                Ok(SliceCheck {
                    index: i,
                    omega: self.speeds[i],
                    value_at_zero: v0,
                    min_derivative: chk.min_derivative,
                    monotone: chk.monotone_nondecreasing,
                    positive: v0 >= 0.0,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate_shape()?;
        Ok(m)
    }
}

/// Free-function form of [`LossModel::loss`].
pub fn model_loss(model: &LossModel, omega_m: f64, tau_m: f64) -> Result<f64> {
    model.loss(omega_m, tau_m)
}
