//! Drive-cycle simulation and method comparison.
//!
//! Decisions are made with each method's own loss description; energy is
//! always accounted on the raw maps so that all methods are charged the same
//! way.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{
    allocate, AllocationQuery, AllocationResult, Drive, GradientOptions, Init, Method, PowertrainConfig,
};
use crate::error::{Error, Result};
use crate::powertrain::{
    cycle_torque_demand, fit_loss_model, motor_electric_power, total_energy, DriveCycle, LossModel, MotorSpec,
    SpeedBlend, SpeedSampling, VehicleParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimMethod {
    /// Grid search on the raw maps.
    Gs,
    /// Gradient method on unconstrained fits.
    Up,
    /// Gradient method on pseudoconvex fits.
    Pp,
    UpKkt,
    PpKkt,
}

impl SimMethod {
    pub const ALL: [SimMethod; 5] = [SimMethod::Gs, SimMethod::Up, SimMethod::Pp, SimMethod::UpKkt, SimMethod::PpKkt];

    pub fn solver(self) -> Method {
        match self {
            SimMethod::Gs => Method::Grid,
            SimMethod::Up | SimMethod::Pp => Method::Gradient,
            SimMethod::UpKkt | SimMethod::PpKkt => Method::Kkt,
        }
    }

    /// `Some(true)` for pseudoconvex models, `Some(false)` for unconstrained,
    /// `None` when no model is used.
    pub fn constrained(self) -> Option<bool> {
        match self {
            SimMethod::Gs => None,
            SimMethod::Up | SimMethod::UpKkt => Some(false),
            SimMethod::Pp | SimMethod::PpKkt => Some(true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SimMethod::Gs => "GS",
            SimMethod::Up => "UP",
            SimMethod::Pp => "PP",
            SimMethod::UpKkt => "UP_KKT",
            SimMethod::PpKkt => "PP_KKT",
        }
    }
}

impl std::fmt::Display for SimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub config: PowertrainConfig,
    pub front: MotorSpec,
    pub rear: MotorSpec,
    pub methods: Vec<SimMethod>,
    pub cycle: DriveCycle,
    pub degree: usize,
    pub epsilon: f64,
    pub grid_step: f64,
    pub seed: u64,
    pub sampling: SpeedSampling,
    pub blend: SpeedBlend,
}

impl SimConfig {
    pub fn new(
        vehicle: VehicleParams,
        config: PowertrainConfig,
        front: MotorSpec,
        rear: MotorSpec,
        methods: Vec<SimMethod>,
        cycle: DriveCycle,
    ) -> Self {
        Self {
            vehicle,
            config,
            front,
            rear,
            methods,
            cycle,
            degree: 10,
            epsilon: crate::sos::DEFAULT_EPSILON,
            grid_step: crate::allocator::DEFAULT_GRID_STEP,
            seed: 0,
            sampling: SpeedSampling::default(),
            blend: SpeedBlend::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if self.config == PowertrainConfig::Equal && self.front != self.rear {
            return Err(Error::InvalidArgument(
                "EQUAL configuration needs identical front and rear motors".into(),
            ));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        Ok(())
    }
}

/// Front/rear models per fit kind; only the kinds a method needs are present.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FittedModels {
    pub unconstrained: Option<(LossModel, LossModel)>,
    pub constrained: Option<(LossModel, LossModel)>,
}

impl FittedModels {
    fn pair(&self, constrained: bool) -> Option<&(LossModel, LossModel)> {
        if constrained {
            self.constrained.as_ref()
        } else {
            self.unconstrained.as_ref()
        }
    }
}

/// Fits the models required by the configured methods. In the EQUAL
/// configuration the front fit is reused for the rear.
pub fn fit_models(cfg: &SimConfig) -> Result<FittedModels> {
    let mut out = FittedModels::default();
    for constrained in [false, true] {
        if !cfg.methods.iter().any(|m| m.constrained() == Some(constrained)) {
            continue;
        }
        let fit = |spec: &MotorSpec| {
            fit_loss_model(&spec.loss_map, cfg.degree, cfg.epsilon, constrained).map(|m| m.with_blend(cfg.blend))
        };
        let front = fit(&cfg.front)?;
        let rear = if cfg.config == PowertrainConfig::Equal {
            front.clone()
        } else {
            fit(&cfg.rear)?
        };
        if constrained {
            out.constrained = Some((front, rear));
        } else {
            out.unconstrained = Some((front, rear));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub v_mps: f64,
    pub omega_w: f64,
    /// Demand actually served (after clamping infeasible steps).
    pub tau_ref: f64,
    pub sigma: f64,
    /// Electric power of all four motors, W.
    pub p_el_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: SimMethod,
    pub energy_kwh: f64,
    /// Relative to GS when GS was simulated.
    pub delta_vs_gs_pct: Option<f64>,
    pub mean_solve_time_s: f64,
    pub max_solve_time_s: f64,
    pub infeasible_steps: usize,
    pub nonconverged_steps: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub cycle: String,
    pub config: PowertrainConfig,
    pub steps: usize,
    pub sample_time: f64,
    pub methods: Vec<MethodReport>,
}

impl SimReport {
    pub fn method(&self, m: SimMethod) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Allocator<'a> {
    cfg: &'a SimConfig,
    method: SimMethod,
    front: Drive<'a>,
    rear: Drive<'a>,
}

impl<'a> Allocator<'a> {
    fn new(cfg: &'a SimConfig, models: &'a FittedModels, method: SimMethod) -> Result<Self> {
        let (fm, rm) = match method.constrained() {
            None => (None, None),
            Some(c) => {
                let pair = models.pair(c).ok_or_else(|| {
                    Error::InvalidArgument(format!("method {method} needs fitted models"))
                })?;
                (Some(&pair.0), Some(&pair.1))
            }
        };
        Ok(Self {
            cfg,
            method,
            front: Drive::new(&cfg.front, fm),
            rear: Drive::new(&cfg.rear, rm),
        })
    }

    fn query(&self, omega_w: f64, tau_ref: f64) -> AllocationQuery<'a> {
        AllocationQuery::new(omega_w, tau_ref, self.cfg.config, self.front, self.rear)
    }

    fn solve(&self, q: &AllocationQuery, seed: u64) -> Result<AllocationResult> {
        let opts = GradientOptions {
            init: Init::Random(seed),
            ..GradientOptions::default()
        };
        allocate(q, self.method.solver(), &opts, self.cfg.grid_step)
    }

    /// Solves, clamping the demand to the combined capability when the box
    /// is empty. Returns the served demand and whether it was clamped.
    fn solve_clamped(&self, omega_w: f64, tau_ref: f64, seed: u64) -> Result<(AllocationResult, f64, bool)> {
        let q = self.query(omega_w, tau_ref);
        match self.solve(&q, seed) {
            Err(Error::InfeasibleDemand(_)) => {
                let cap = q.capability() * (1.0 - 1e-12);
                let served = cap.copysign(tau_ref);
                let q = self.query(omega_w, served);
                Ok((self.solve(&q, seed)?, served, true))
            }
            other => Ok((other?, tau_ref, false)),
        }
    }
}

/// Four-motor electric power at the chosen split, on the raw maps.
fn accounted_power(cfg: &SimConfig, q: &AllocationQuery, sigma: f64) -> Result<f64> {
    let (tf, tr) = q.motor_torques(sigma);
    let pf = motor_electric_power(&cfg.front.loss_map, cfg.front.motor_speed(q.omega_w), tf)?;
    let pr = motor_electric_power(&cfg.rear.loss_map, cfg.rear.motor_speed(q.omega_w), tr)?;
    Ok(2.0 * (pf + pr))
}

/// Runs every configured method over the cycle. At standstill with zero
/// demand the motors are treated as switched off.
pub fn run_cycle(cfg: &SimConfig, models: &FittedModels) -> Result<SimReport> {
    cfg.validate()?;
    let demand = cycle_torque_demand(&cfg.vehicle, &cfg.cycle, cfg.sampling);
    let mut reports = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let alloc = Allocator::new(cfg, models, method)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut trace = Vec::with_capacity(demand.len());
        let mut powers = Vec::with_capacity(demand.len());
        let (mut t_sum, mut t_max) = (0.0, 0.0f64);
        let (mut infeasible, mut nonconverged) = (0, 0);
        for d in &demand {
            let seed = rng.next_u64();
            let (res, served, clamped) = alloc.solve_clamped(d.omega_w, d.tau_ref, seed)?;
            infeasible += clamped as usize;
            nonconverged += !res.converged as usize;
            t_sum += res.solve_time_s;
            t_max = t_max.max(res.solve_time_s);
            let q = alloc.query(d.omega_w, served);
            let p = if d.standstill && served == 0.0 {
                0.0
            } else {
                accounted_power(cfg, &q, res.sigma)?
            };
            powers.push(p);
            trace.push(TraceRow {
                t_s: d.t,
                v_mps: d.v,
                omega_w: d.omega_w,
                tau_ref: served,
                sigma: res.sigma,
                p_el_w: p,
            });
        }
        if infeasible > 0 {
            log::warn!("{method}: {infeasible} steps exceeded the motor capability and were clamped");
        }
        let n = demand.len().max(1) as f64;
        reports.push(MethodReport {
            method,
            energy_kwh: total_energy(&powers, cfg.cycle.sample_time),
            delta_vs_gs_pct: None,
            mean_solve_time_s: t_sum / n,
            max_solve_time_s: t_max,
            infeasible_steps: infeasible,
            nonconverged_steps: nonconverged,
            trace,
        });
    }
    if let Some(gs) = reports.iter().find(|r| r.method == SimMethod::Gs).map(|r| r.energy_kwh) {
        for r in &mut reports {
            r.delta_vs_gs_pct = Some(if r.method == SimMethod::Gs {
                0.0
            } else if gs != 0.0 {
                100.0 * (r.energy_kwh - gs) / gs.abs()
            } else {
                0.0
            });
        }
    }
    Ok(SimReport {
        cycle: cfg.cycle.name.clone(),
        config: cfg.config,
        steps: demand.len(),
        sample_time: cfg.cycle.sample_time,
        methods: reports,
    })
}

/// Fits what is needed and runs the cycle.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    let models = fit_models(cfg)?;
    run_cycle(cfg, &models)
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("t_s,v_mps,omega_w,tau_ref,sigma,p_el_w\n");
    for r in trace {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.t_s, r.v_mps, r.omega_w, r.tau_ref, r.sigma, r.p_el_w);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaCell {
    pub omega_w: f64,
    pub tau_ref: f64,
    /// `None` where the demand is out of range or infeasible.
    pub sigma: Option<f64>,
}

/// Allocation over a `(ω_w, τ_ref)` grid, row-major in `ω_w`. Cells are
/// solved in parallel; gradient starts are seeded per cell.
pub fn sigma_map(
    cfg: &SimConfig,
    models: &FittedModels,
    omega_grid: &[f64],
    tau_grid: &[f64],
    method: SimMethod,
) -> Result<Vec<SigmaCell>> {
    let alloc = Allocator::new(cfg, models, method)?;
    let cells: Vec<(f64, f64)> = omega_grid
        .iter()
        .flat_map(|&w| tau_grid.iter().map(move |&t| (w, t)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(w, t))| {
            let seed = cfg.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let sigma = match alloc.solve(&alloc.query(w, t), seed) {
                Ok(r) => Some(r.sigma),
                Err(Error::OutOfRange(_) | Error::InfeasibleDemand(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SigmaCell {
                omega_w: w,
                tau_ref: t,
                sigma,
            })
        })
        .collect()
}

pub fn sigma_map_csv(cells: &[SigmaCell]) -> String {
    let mut out = String::from("omega_w,tau_ref,sigma\n");
    for c in cells {
        match c.sigma {
            Some(s) => writeln!(out, "{},{},{}", c.omega_w, c.tau_ref, s),
            None => writeln!(out, "{},{},", c.omega_w, c.tau_ref),
        }
        .unwrap();
    }
    out
}

/// Methods as rows, cycles as columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub cycles: Vec<String>,
    pub methods: Vec<SimMethod>,
    /// `energy[method][cycle]` in kWh.
    pub energy: Vec<Vec<Option<f64>>>,
    pub delta_pct: Vec<Vec<Option<f64>>>,
}

pub fn comparison_table(reports: &[SimReport]) -> ComparisonTable {
    let mut methods: Vec<SimMethod> = reports.iter().flat_map(|r| r.methods.iter().map(|m| m.method)).collect();
    methods.sort();
    methods.dedup();
    let cell = |m: SimMethod, f: fn(&MethodReport) -> Option<f64>| -> Vec<Option<f64>> {
        reports.iter().map(|r| r.method(m).and_then(f)).collect()
    };
    ComparisonTable {
        cycles: reports.iter().map(|r| r.cycle.clone()).collect(),
        energy: methods.iter().map(|&m| cell(m, |r| Some(r.energy_kwh))).collect(),
        delta_pct: methods.iter().map(|&m| cell(m, |r| r.delta_vs_gs_pct)).collect(),
        methods,
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.prec$}"))
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for c in &self.cycles {
            let _ = write!(out, ",{c}_kwh,{c}_delta_pct");
        }
        out.push('\n');
        for (i, m) in self.methods.iter().enumerate() {
            out.push_str(m.name());
            for j in 0..self.cycles.len() {
                let _ = write!(out, ",{},{}", opt(self.energy[i][j], 6), opt(self.delta_pct[i][j], 4));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .methods
            .iter()
            .enumerate()
            .map(|(i, _)| {
                (0..self.cycles.len())
                    .map(|j| match (self.energy[i][j], self.delta_pct[i][j]) {
                        (Some(e), Some(d)) => format!("{e:.4} ({d:+.2}%)"),
                        (Some(e), None) => format!("{e:.4}"),
                        _ => "-".into(),
                    })
                    .collect()
            })
            .collect();
        let w0 = self.methods.iter().map(|m| m.name().len()).max().unwrap_or(0).max("Method".len());
        let widths: Vec<usize> = (0..self.cycles.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.cycles[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = format!("{:<w0$}", "Method");
        for (c, w) in self.cycles.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&cells) {
            let _ = write!(out, "{:<w0$}", m.name());
            for (c, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powertrain::{generate_synthetic_map, uniform_grid, SyntheticKind};

    fn convex_spec(c_copper: f64, h: f64) -> MotorSpec {
        let kind = SyntheticKind::PmsmLike {
            c0: 50.0,
            c_copper,
            c_iron: 0.2,
            c_windage: 1e-7,
        };
        let map = generate_synthetic_map(&kind, &uniform_grid(0.0, 800.0, 20.0), &uniform_grid(0.0, 300.0, 2.0)).unwrap();
        MotorSpec::new("pmsm", h, map).unwrap()
    }

    #[test]
    fn zero_cycle_costs_nothing() {
        let spec = convex_spec(0.05, 4.4863);
        let cycle = DriveCycle::new("rest", 1.0, vec![0.0; 30]).unwrap();
        let cfg = SimConfig::new(VehicleParams::default(), PowertrainConfig::Equal, spec.clone(), spec, SimMethod::ALL.to_vec(), cycle);
        let rep = simulate(&cfg).unwrap();
        for m in &rep.methods {
            assert_eq!(m.energy_kwh, 0.0, "{}", m.method);
            assert_eq!(m.trace.len(), 30);
        }
        assert_eq!(rep.method(SimMethod::Gs).unwrap().delta_vs_gs_pct, Some(0.0));
    }

    #[test]
    fn equal_convex_all_methods_agree() {
        let spec = convex_spec(0.05, 4.4863);
        let cfg = SimConfig::new(
            VehicleParams::default(),
            PowertrainConfig::Equal,
            spec.clone(),
            spec,
            SimMethod::ALL.to_vec(),
            DriveCycle::synthetic("syn", 120),
        );
        let rep = simulate(&cfg).unwrap();
        let gs = rep.method(SimMethod::Gs).unwrap();
        for m in &rep.methods {
            let bad: Vec<_> = m.trace.iter().filter(|r| r.sigma != 0.5).take(3).collect();
            assert!(bad.is_empty(), "{} {:?}", m.method, bad);
            assert_eq!(m.energy_kwh, gs.energy_kwh);
        }
    }

    #[test]
    fn table_layout() {
        let rep = SimReport {
            cycle: "A".into(),
            config: PowertrainConfig::Equal,
            steps: 1,
            sample_time: 1.0,
            methods: vec![MethodReport {
                method: SimMethod::Gs,
                energy_kwh: 1.5,
                delta_vs_gs_pct: Some(0.0),
                mean_solve_time_s: 0.0,
                max_solve_time_s: 0.0,
                infeasible_steps: 0,
                nonconverged_steps: 0,
                trace: vec![],
            }],
        };
        let t = comparison_table(&[rep]);
        assert_eq!(t.to_csv(), "method,A_kwh,A_delta_pct\nGS,1.500000,0.0000\n");
        assert!(t.to_text().contains("1.5000 (+0.00%)"));
        assert_eq!("pp_kkt".parse::<SimMethod>().unwrap(), SimMethod::PpKkt);
    }
}
