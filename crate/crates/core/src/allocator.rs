//! Front/rear torque distribution for one vehicle side.
//!
//! The decision variable is the front-to-total ratio `σ`: the front wheel
//! carries `σ·τ_ref` and the rear `(1 − σ)·τ_ref`. With polynomial loss
//! models the total loss is a polynomial in `σ`, so every stationary point
//! can be enumerated.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{real_roots, Polynomial, RootOptions};
use crate::powertrain::{LossModel, MotorSpec, TORQUE_RANGE_SLACK};

/// Candidates within this fraction of the loss scale count as ties.
pub const TIE_REL_TOL: f64 = 1e-9;

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowertrainConfig {
    /// Identical front and rear motors; `σ ∈ [0.5, 1]` by symmetry.
    Equal,
    /// Different motors; `σ ∈ [0, 1]`.
    Unequal,
}

impl PowertrainConfig {
    pub fn base_box(self) -> (f64, f64) {
        match self {
            PowertrainConfig::Equal => (0.5, 1.0),
            PowertrainConfig::Unequal => (0.0, 1.0),
        }
    }
}

impl std::str::FromStr for PowertrainConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EQUAL" => Ok(Self::Equal),
            "UNEQUAL" => Ok(Self::Unequal),
            _ => Err(Error::InvalidArgument(format!("unknown configuration {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Gradient,
    Kkt,
    Grid,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Gradient => "GRADIENT",
            Method::Kkt => "KKT",
            Method::Grid => "GRID",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GRADIENT" => Ok(Self::Gradient),
            "KKT" => Ok(Self::Kkt),
            "GRID" | "GS" => Ok(Self::Grid),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// One axle: its motor and, for the polynomial methods, a fitted model.
#[derive(Clone, Copy, Debug)]
pub struct Drive<'a> {
    pub spec: &'a MotorSpec,
    pub model: Option<&'a LossModel>,
}

impl<'a> Drive<'a> {
    pub fn new(spec: &'a MotorSpec, model: Option<&'a LossModel>) -> Self {
        Self { spec, model }
    }

    fn model(&self) -> Result<&'a LossModel> {
        self.model.ok_or_else(|| {
            Error::InvalidArgument(format!("motor {:?} has no fitted loss model", self.spec.label))
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AllocationQuery<'a> {
    /// Wheel speed, rad/s.
    pub omega_w: f64,
    /// Per-side wheel torque demand, N·m (negative when braking).
    pub tau_ref: f64,
    pub config: PowertrainConfig,
    pub front: Drive<'a>,
    pub rear: Drive<'a>,
}

impl<'a> AllocationQuery<'a> {
    pub fn new(omega_w: f64, tau_ref: f64, config: PowertrainConfig, front: Drive<'a>, rear: Drive<'a>) -> Self {
        Self {
            omega_w,
            tau_ref,
            config,
            front,
            rear,
        }
    }

    /// Checks the documented preconditions. The comparison of the two motor
    /// specs for `Equal` is a full map comparison, so this is not run per
    /// solve.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_w >= 0.0 && self.omega_w.is_finite()) || !self.tau_ref.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid operating point ω_w = {}, τ_ref = {}",
                self.omega_w, self.tau_ref
            )));
        }
        if self.config == PowertrainConfig::Equal && self.front.spec != self.rear.spec {
            return Err(Error::InvalidArgument(
                "EQUAL configuration needs identical front and rear motors".into(),
            ));
        }
        Ok(())
    }

    fn demand(&self) -> f64 {
        self.tau_ref.abs()
    }

    fn front_speed(&self) -> f64 {
        self.front.spec.motor_speed(self.omega_w)
    }

    fn rear_speed(&self) -> f64 {
        self.rear.spec.motor_speed(self.omega_w)
    }

    /// Signed motor torques `(front, rear)` at `σ`.
    pub fn motor_torques(&self, sigma: f64) -> (f64, f64) {
        (
            sigma * self.tau_ref / self.front.spec.gear_ratio,
            (1.0 - sigma) * self.tau_ref / self.rear.spec.gear_ratio,
        )
    }

    /// Largest per-side wheel torque the two motors can deliver together.
    pub fn capability(&self) -> f64 {
        self.front.spec.gear_ratio * self.front.spec.torque_limit(self.front_speed())
            + self.rear.spec.gear_ratio * self.rear.spec.torque_limit(self.rear_speed())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub sigma: f64,
    /// Total loss of both motors at `sigma` under the method's own loss
    /// description (fitted model, or raw map for the grid search), W.
    pub loss_total: f64,
    pub method: Method,
    pub candidates_evaluated: usize,
    pub solve_time_s: f64,
    pub front_motor_torque: f64,
    pub rear_motor_torque: f64,
    /// False when the gradient iteration hit its limit.
    pub converged: bool,
}

impl AllocationResult {
    fn new(q: &AllocationQuery, method: Method, sigma: f64, loss: f64, candidates: usize, start: Instant) -> Self {
        let (tf, tr) = q.motor_torques(sigma);
        Self {
            sigma,
            loss_total: loss,
            method,
            candidates_evaluated: candidates,
            solve_time_s: start.elapsed().as_secs_f64(),
            front_motor_torque: tf,
            rear_motor_torque: tr,
            converged: true,
        }
    }
}

/// Base box for the configuration, shrunk so both motors stay within
/// their torque limits (and the map grids).
pub fn feasible_sigma_box(q: &AllocationQuery) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = q.config.base_box();
    let t = q.demand();
    if t == 0.0 {
        return Ok((lo, hi));
    }
    let f_cap = q.front.spec.gear_ratio * q.front.spec.torque_limit(q.front_speed());
    let r_cap = q.rear.spec.gear_ratio * q.rear.spec.torque_limit(q.rear_speed());
    hi = hi.min(f_cap / t);
    lo = lo.max(1.0 - r_cap / t);
    if lo > hi {
        return Err(Error::InfeasibleDemand(format!(
            "demand {t} N·m exceeds capability {} N·m in the {:?} box",
            f_cap + r_cap,
            q.config
        )));
    }
    Ok((lo, hi))
}

/// `L(σ) = P_f(σ·|τ_ref|/h_f) + P_r((1 − σ)·|τ_ref|/h_r)` with each side's
/// slice polynomial taken at its motor speed.
pub fn objective_polynomial(q: &AllocationQuery) -> Result<Polynomial> {
    let fm = q.front.model()?;
    let rm = q.rear.model()?;
    let t = q.demand();
    let (hf, hr) = (q.front.spec.gear_ratio, q.rear.spec.gear_ratio);
    let slack = 1.0 + TORQUE_RANGE_SLACK;
    if t > (hf * fm.max_torque() + hr * rm.max_torque()) * slack {
        return Err(Error::OutOfRange(format!(
            "demand {t} N·m exceeds the combined fitted range"
        )));
    }
    let pf = fm.slice_polynomial(q.front_speed()).compose_affine(t / hf, 0.0);
    let pr = rm.slice_polynomial(q.rear_speed()).compose_affine(-t / hr, t / hr);
    Ok(&pf + &pr)
}

/// `σ` is undefined without demand; by convention the split is even.
fn zero_demand_sigma(lo: f64, hi: f64) -> f64 {
    0.5f64.clamp(lo, hi)
}

fn loss_scale(l: &Polynomial, lo: f64, hi: f64) -> f64 {
    1f64.max(l.eval(lo).abs()).max(l.eval(hi).abs())
}

/// Tie rule: among candidates within `TIE_REL_TOL·scale` of the best, prefer
/// `σ = 0.5`, then the smallest `σ`.
fn pick_candidate(cands: &[(f64, f64)], scale: f64) -> (f64, f64) {
    let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let near = cands.iter().filter(|c| c.1 <= best + TIE_REL_TOL * scale);
    let mut chosen: Option<(f64, f64)> = None;
    for &c in near {
        chosen = match chosen {
            None => Some(c),
            Some(cur) => {
                let c_half = c.0 == 0.5;
                let cur_half = cur.0 == 0.5;
                if (c_half && !cur_half) || (c_half == cur_half && c.0 < cur.0) {
                    Some(c)
                } else {
                    Some(cur)
                }
            }
        };
    }
    chosen.expect("at least one candidate")
}

/// Starting point for the gradient method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Fixed(f64),
    /// Uniform on the feasible box from a seeded generator.
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientOptions {
    pub init: Init,
    pub max_iter: usize,
    /// Stop when `|projected gradient| ≤ tol·scale`.
    pub tol: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            init: Init::Random(0),
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

/// Projected Newton on `L` over the box, falling back to a projected
/// gradient step when `L″ ≤ 0`. Steps are accepted by Armijo backtracking.
/// Converges to some KKT point; which one depends on the start.
pub fn solve_gradient(q: &AllocationQuery, opts: &GradientOptions) -> Result<AllocationResult> {
    let start = Instant::now();
    let (lo, hi) = feasible_sigma_box(q)?;
    let l = objective_polynomial(q)?;
    let dl = l.derivative();
    let ddl = dl.derivative();
    if q.demand() == 0.0 {
        let s = zero_demand_sigma(lo, hi);
        return Ok(AllocationResult::new(q, Method::Gradient, s, l.eval(s), 1, start));
    }
    let scale = loss_scale(&l, lo, hi);
    let mut sigma = match opts.init {
        Init::Fixed(s) => s.clamp(lo, hi),
        Init::Random(seed) if hi > lo => ChaCha8Rng::seed_from_u64(seed).gen_range(lo..=hi),
        Init::Random(_) => lo,
    };
    let mut f = l.eval(sigma);
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let g = dl.eval(sigma);
        let pg = if (sigma <= lo && g > 0.0) || (sigma >= hi && g < 0.0) {
            0.0
        } else {
            g
        };
        if pg.abs() <= opts.tol * scale {
            converged = true;
            break;
        }
        let h = ddl.eval(sigma);
        let dir = if h > 0.0 { -g / h } else { -g.signum() * (hi - lo) };
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = (sigma + alpha * dir).clamp(lo, hi);
            let fc = l.eval(cand);
            if fc <= f + 1e-4 * g * (cand - sigma) && cand != sigma {
                sigma = cand;
                f = fc;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            // no representable decrease left along the projected direction
            converged = true;
            break;
        }
    }
    // snap onto a bound the iterate has numerically reached
    for b in [lo, hi] {
        if (sigma - b).abs() <= 1e-9 {
            let fb = l.eval(b);
            if fb <= f + TIE_REL_TOL * scale {
                sigma = b;
                f = fb;
            }
        }
    }
    let mut res = AllocationResult::new(q, Method::Gradient, sigma, f, 1, start);
    res.converged = converged;
    Ok(res)
}

/// Enumerates all stationary points of `L` in the box plus the box ends and
/// returns the best, i.e. the global minimum of the polynomial objective.
pub fn solve_kkt(q: &AllocationQuery) -> Result<AllocationResult> {
    let start = Instant::now();
    let (lo, hi) = feasible_sigma_box(q)?;
    let l = objective_polynomial(q)?;
    if q.demand() == 0.0 {
        let s = zero_demand_sigma(lo, hi);
        return Ok(AllocationResult::new(q, Method::Kkt, s, l.eval(s), 1, start));
    }
    let dl = l.derivative();
    let mut sigmas = vec![lo, hi];
    if hi <= lo {
        // box pinned to a point at full capability
    } else if dl.effective_degree().is_some() {
        sigmas.extend(real_roots(&dl, lo, hi, &RootOptions::default())?);
    } else if (lo..=hi).contains(&0.5) {
        sigmas.push(0.5);
    }
    let cands: Vec<(f64, f64)> = sigmas.iter().map(|&s| (s, l.eval(s))).collect();
    let (s, v) = pick_candidate(&cands, loss_scale(&l, lo, hi));
    Ok(AllocationResult::new(q, Method::Kkt, s, v, cands.len(), start))
}

/// Exhaustive search on `lo, lo + step, …` (plus `hi`) using the raw maps.
/// A later point must beat the incumbent by more than the tie tolerance,
/// so ties resolve to the smallest `σ`.
pub fn solve_gridsearch(q: &AllocationQuery, grid_step: f64) -> Result<AllocationResult> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {grid_step}")));
    }
    let start = Instant::now();
    let (lo, hi) = feasible_sigma_box(q)?;
    let t = q.demand();
    let (wf, wr) = (q.front_speed(), q.rear_speed());
    let (hf, hr) = (q.front.spec.gear_ratio, q.rear.spec.gear_ratio);
    let (mf, mr) = (&q.front.spec.loss_map, &q.rear.spec.loss_map);
    let total = |s: f64| -> Result<f64> {
        Ok(mf.interpolate(wf, s * t / hf)? + mr.interpolate(wr, (1.0 - s) * t / hr)?)
    };
    if t == 0.0 {
        let s = zero_demand_sigma(lo, hi);
        return Ok(AllocationResult::new(q, Method::Grid, s, total(s)?, 1, start));
    }
    let n = ((hi - lo) / grid_step + 1e-9).floor() as usize;
    let mut best = (lo, total(lo)?);
    let tie = TIE_REL_TOL * 1f64.max(best.1.abs()).max(total(hi)?.abs());
    let mut count = 1;
    let mut visit = |s: f64, best: &mut (f64, f64)| -> Result<()> {
        let v = total(s)?;
        count += 1;
        if v < best.1 - tie {
            *best = (s, v);
        }
        Ok(())
    };
    for i in 1..=n {
        visit(lo + i as f64 * grid_step, &mut best)?;
    }
    if lo + n as f64 * grid_step < hi - 1e-12 {
        visit(hi, &mut best)?;
    }
    Ok(AllocationResult::new(q, Method::Grid, best.0, best.1, count, start))
}

/// Dispatch by method with default options.
pub fn allocate(q: &AllocationQuery, method: Method, gradient: &GradientOptions, grid_step: f64) -> Result<AllocationResult> {
    match method {
        Method::Gradient => solve_gradient(q, gradient),
        Method::Kkt => solve_kkt(q),
        Method::Grid => solve_gridsearch(q, grid_step),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powertrain::{map_from_slices, LossMap, SpeedBlend, TorqueCurve};

    fn quad_spec(h: f64) -> (MotorSpec, LossModel) {
        // P = τ² at every speed
        let speeds = vec![0.0, 1000.0];
        let torques: Vec<f64> = (0..=200).map(|i| i as f64 * 0.5).collect();
        let map = map_from_slices(&speeds, &torques, |_| Polynomial::new(vec![0.0, 0.0, 1.0])).unwrap();
        let model = LossModel {
            speeds: speeds.clone(),
            polys: vec![Polynomial::new(vec![0.0, 0.0, 1.0]); 2],
            fit_meta: vec![],
            torque_range: (0.0, 100.0),
            degree: 2,
            epsilon: 0.0,
            constrained: false,
            blend: SpeedBlend::Linear,
        };
        (MotorSpec::new("quad", h, map).unwrap(), model)
    }

    #[test]
    fn objective_algebra() {
        let (s1, m1) = quad_spec(1.0);
        let q = AllocationQuery::new(10.0, 10.0, PowertrainConfig::Unequal, Drive::new(&s1, Some(&m1)), Drive::new(&s1, Some(&m1)));
        let l = objective_polynomial(&q).unwrap();
        for s in [0.0, 0.3, 0.5, 1.0] {
            assert!((l.eval(s) - (100.0 * s * s + 100.0 * (1.0 - s) * (1.0 - s))).abs() < 1e-9);
        }
        let q0 = AllocationQuery { tau_ref: 0.0, ..q };
        assert_eq!(objective_polynomial(&q0).unwrap().effective_degree(), None);
    }

    #[test]
    fn unequal_gear_ratio_minimizer() {
        let (s2, m2) = quad_spec(2.0);
        let (s1, m1) = quad_spec(1.0);
        let q = AllocationQuery::new(10.0, 10.0, PowertrainConfig::Unequal, Drive::new(&s2, Some(&m2)), Drive::new(&s1, Some(&m1)));
        let l = objective_polynomial(&q).unwrap();
        assert!((l.eval(0.3) - (25.0 * 0.09 + 100.0 * 0.49)).abs() < 1e-9);
        let kkt = solve_kkt(&q).unwrap();
        assert!((kkt.sigma - 0.8).abs() < 1e-9);
        assert_eq!(kkt.candidates_evaluated, 3);
        for init in [0.0, 0.2, 0.99] {
            let g = solve_gradient(&q, &GradientOptions { init: Init::Fixed(init), ..Default::default() }).unwrap();
            assert!((g.sigma - 0.8).abs() < 1e-6, "init {init}: {}", g.sigma);
            assert!(g.converged);
        }
        let gs = solve_gridsearch(&q, 1e-3).unwrap();
        assert!((gs.sigma - 0.8).abs() <= 1e-3);
        assert!((gs.front_motor_torque - gs.sigma * 10.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_convex_gives_half_and_zero_demand_ties() {
        let (s, m) = quad_spec(1.0);
        let d = Drive::new(&s, Some(&m));
        let q = AllocationQuery::new(5.0, 40.0, PowertrainConfig::Equal, d, d);
        assert_eq!(solve_kkt(&q).unwrap().sigma, 0.5);
        assert_eq!(solve_gradient(&q, &GradientOptions::default()).unwrap().sigma, 0.5);
        let q0 = AllocationQuery { tau_ref: 0.0, ..q };
        assert_eq!(solve_kkt(&q0).unwrap().sigma, 0.5);
        let qu = AllocationQuery { config: PowertrainConfig::Unequal, ..q0 };
        assert_eq!(solve_kkt(&qu).unwrap().sigma, 0.5);
        let gs = solve_gridsearch(&q, 0.5).unwrap();
        assert_eq!(gs.candidates_evaluated, 2);
    }

    #[test]
    fn sign_invariance() {
        let (s2, m2) = quad_spec(2.0);
        let (s1, m1) = quad_spec(1.0);
        let q = AllocationQuery::new(10.0, 37.0, PowertrainConfig::Unequal, Drive::new(&s2, Some(&m2)), Drive::new(&s1, Some(&m1)));
        let qn = AllocationQuery { tau_ref: -37.0, ..q };
        let a = solve_kkt(&q).unwrap();
        let b = solve_kkt(&qn).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.loss_total, b.loss_total);
        assert_eq!(a.front_motor_torque, -b.front_motor_torque);
        assert_eq!(solve_gridsearch(&q, 1e-3).unwrap().sigma, solve_gridsearch(&qn, 1e-3).unwrap().sigma);
    }

    #[test]
    fn torque_limits_shrink_box() {
        let flat = LossMap::new(vec![0.0, 10.0], vec![0.0, 200.0], vec![vec![0.0, 1.0]; 2]).unwrap();
        let f = MotorSpec::new("f", 1.0, flat.clone()).unwrap().with_torque_curve(TorqueCurve::new(vec![(0.0, 40.0)]).unwrap());
        let r = MotorSpec::new("r", 1.0, flat).unwrap().with_torque_curve(TorqueCurve::new(vec![(0.0, 80.0)]).unwrap());
        let q = AllocationQuery::new(1.0, 100.0, PowertrainConfig::Unequal, Drive::new(&f, None), Drive::new(&r, None));
        let (lo, hi) = feasible_sigma_box(&q).unwrap();
        assert!((hi - 0.4).abs() < 1e-12);
        assert!((lo - 0.2).abs() < 1e-12);
        let q = AllocationQuery { tau_ref: 130.0, ..q };
        assert!(matches!(feasible_sigma_box(&q), Err(Error::InfeasibleDemand(_))));
        assert!(matches!(solve_kkt(&q), Err(Error::InfeasibleDemand(_))));
        let unlimited = AllocationQuery::new(1.0, 10.0, PowertrainConfig::Unequal, Drive::new(&f, None), Drive::new(&r, None));
        assert_eq!(feasible_sigma_box(&unlimited).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn tie_rule() {
        assert_eq!(pick_candidate(&[(1.0, 3.0), (0.5, 3.0), (0.2, 3.0)], 1.0).0, 0.5);
        assert_eq!(pick_candidate(&[(1.0, 3.0), (0.2, 3.0)], 1.0).0, 0.2);
        assert_eq!(pick_candidate(&[(1.0, 2.0), (0.5, 3.0)], 1.0).0, 1.0);
    }

    #[test]
    fn full_capability_pins_the_box() {
        let (s, m) = quad_spec(1.0);
        let d = Drive::new(&s, Some(&m));
        // 2 × 100 N·m at σ = 0.5 is the only feasible split
        let q = AllocationQuery::new(5.0, 200.0, PowertrainConfig::Equal, d, d);
        assert_eq!(feasible_sigma_box(&q).unwrap(), (0.5, 0.5));
        assert_eq!(solve_kkt(&q).unwrap().sigma, 0.5);
        assert_eq!(solve_gradient(&q, &GradientOptions::default()).unwrap().sigma, 0.5);
        assert_eq!(solve_gridsearch(&q, 1e-3).unwrap().sigma, 0.5);
    }
}
