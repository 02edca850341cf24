//! Small dense conic solver.
//!
//! Programs are stated in equality form over a decision vector `z`:
//!
//! ```text
//! minimize    ½ zᵀ P z + qᵀ z + r
//! subject to  A z = b
//!             M_k(z) ⪰ 0      for every cone block k
//! ```
//!
//! where each `M_k` is affine in `z`. [`solve_conic`] eliminates the equalities
//! with an orthonormal nullspace basis and runs a log-det barrier method on
//! the remaining linear matrix inequalities. Block sizes in this crate stay
//! below ten, so everything is dense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `F(w) = F₀ + Σᵢ wᵢ Fᵢ`, all symmetric.
#[derive(Clone, Debug)]
pub struct Lmi {
    pub constant: DMatrix<f64>,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl Lmi {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut f = self.constant.clone();
        for (wi, fi) in w.iter().zip(&self.coeffs) {
            if *wi != 0.0 {
                f += fi * *wi;
            }
        }
        f
    }
}

/// Convex quadratic objective under LMIs, no equalities.
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub quad: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub offset: f64,
    pub blocks: Vec<Lmi>,
}

impl LmiProblem {
    pub fn nvars(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.quad * w)) + self.lin.dot(w) + self.offset
    }

    fn barrier_order(&self) -> f64 {
        self.blocks.iter().map(|b| b.dim()).sum::<usize>() as f64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Stop once the suboptimality bound `m/t` drops below this.
    pub gap_tol: f64,
    /// Centering stops when half the squared Newton decrement is below this.
    pub newton_tol: f64,
    pub mu: f64,
    pub t0: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-12,
            newton_tol: 1e-12,
            mu: 12.0,
            t0: 1.0,
            max_newton: 600,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierSolution {
    pub w: DVector<f64>,
    pub objective: f64,
    /// Upper bound on `objective − optimum`, valid at a centered point.
    pub gap_bound: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

const MAX_CENTERING_STEPS: usize = 60;

struct Derivs {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// Log-det barrier value, or `None` when some block is not positive definite.
fn barrier_value(blocks: &[Lmi], w: &DVector<f64>) -> Option<f64> {
    let mut v = 0.0;
    for b in blocks {
        let chol = b.eval(w).cholesky()?;
        let l = chol.l_dirty();
        for i in 0..b.dim() {
            v -= 2.0 * l[(i, i)].ln();
        }
    }
    Some(v)
}

fn barrier_derivs(blocks: &[Lmi], w: &DVector<f64>, n: usize) -> Option<Derivs> {
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for b in blocks {
        let chol = b.eval(w).cholesky()?;
        let l = chol.l();
        // Bᵢ = L⁻¹ Fᵢ L⁻ᵀ, so tr(F⁻¹Fᵢ) = tr(Bᵢ) and tr(F⁻¹FᵢF⁻¹Fⱼ) = ⟨Bᵢ, Bⱼ⟩.
        let bs: Vec<DMatrix<f64>> = b
            .coeffs
            .iter()
            .map(|fi| {
                let x = l.solve_lower_triangular(fi).expect("cholesky factor is nonsingular");
                l.solve_lower_triangular(&x.transpose())
                    .expect("cholesky factor is nonsingular")
            })
            .collect();
        for i in 0..n {
            grad[i] -= bs[i].trace();
            for j in 0..=i {
                let h = bs[i].dot(&bs[j]);
                hess[(i, j)] += h;
                if i != j {
                    hess[(j, i)] += h;
                }
            }
        }
    }
    Some(Derivs { grad, hess })
}

/// Solve `H x = rhs` for symmetric positive (semi)definite `H`.
fn solve_newton(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = rhs.len();
    let d = DVector::from_fn(n, |i, _| {
        let hii = h[(i, i)];
        if hii > 0.0 && hii.is_finite() {
            1.0 / hii.sqrt()
        } else {
            1.0
        }
    });
    let mut hs = h.clone();
    for i in 0..n {
        for j in 0..n {
            hs[(i, j)] *= d[i] * d[j];
        }
    }
    let rs = rhs.component_mul(&d);
    let mut ridge = 0.0;
    for _ in 0..6 {
        let mut m = hs.clone();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            let x = ch.solve(&rs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x.component_mul(&d));
            }
        }
        ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
    }
    let svd = hs.svd(true, true);
    let x = svd.solve(&rs, 1e-14).ok()?;
    x.iter().all(|v| v.is_finite()).then(|| x.component_mul(&d))
}

/// Barrier method from a strictly feasible `start`.
///
/// `stop_early` is consulted after each centering step and ends the solve
/// when it returns true (used by phase I once a strict point is found).
pub fn minimize_barrier(
    problem: &LmiProblem,
    start: &DVector<f64>,
    opts: &BarrierOptions,
    stop_early: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<BarrierSolution> {
    let n = problem.nvars();
    let m = problem.barrier_order();
    let mut w = start.clone();
    if barrier_value(&problem.blocks, &w).is_none() {
        return Err(Error::InvalidArgument(
            "barrier start is not strictly feasible".into(),
        ));
    }
    if m == 0.0 || n == 0 {
        let objective = problem.objective(&w);
        return Ok(BarrierSolution {
            w,
            objective,
            gap_bound: 0.0,
            newton_iterations: 0,
            converged: n == 0,
        });
    }

    let mut t = opts.t0;
    let mut iters = 0;
    let mut converged = false;
    let mut stalled = false;
    'outer: loop {
        // centering
        let mut inner = 0;
        loop {
            if iters >= opts.max_newton {
                break 'outer;
            }
            if inner >= MAX_CENTERING_STEPS {
                break;
            }
            iters += 1;
            inner += 1;
            let Some(bd) = barrier_derivs(&problem.blocks, &w, n) else {
                return Err(Error::NumericalFailure(
                    "iterate left the cone interior".into(),
                ));
            };
            let grad = (&problem.quad * &w + &problem.lin) * t + bd.grad;
            let hess = &problem.quad * t + bd.hess;
            let Some(step) = solve_newton(&hess, &(-&grad)) else {
                stalled = true;
                break 'outer;
            };
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                stalled = true;
                break 'outer;
            }
            if decrement * 0.5 <= opts.newton_tol {
                break;
            }
            let phi0 = t * problem.objective(&w) + barrier_value(&problem.blocks, &w).unwrap();
            let mut alpha = 1.0;
            let mut decrease = None;
            while alpha > 1e-16 {
                let cand = &w + &step * alpha;
                if let Some(bv) = barrier_value(&problem.blocks, &cand) {
                    let phi = t * problem.objective(&cand) + bv;
                    if phi <= phi0 - 0.25 * alpha * decrement {
                        w = cand;
                        decrease = Some(phi0 - phi);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // No decrease above rounding level: centered as well as f64 allows.
            match decrease {
                Some(d) if d > 64.0 * f64::EPSILON * phi0.abs().max(1.0) => {}
                _ => break,
            }
        }
        if let Some(stop) = stop_early {
            if stop(&w) {
                converged = true;
                break;
            }
        }
        if m / t <= opts.gap_tol {
            converged = true;
            break;
        }
        t *= opts.mu;
    }
    let objective = problem.objective(&w);
    Ok(BarrierSolution {
        w,
        objective,
        gap_bound: m / t,
        newton_iterations: iters,
        converged: converged && !stalled,
    })
}

#[derive(Clone, Debug)]
pub struct InteriorPoint {
    pub w: DVector<f64>,
    /// Largest `s` such that every block satisfies `F(w) ⪰ s·I`, capped.
    pub margin: f64,
    /// True when the optimal margin is provably below `-feas_tol`.
    pub certified_infeasible: bool,
}

/// Phase I: maximize the smallest eigenvalue margin over all blocks.
///
/// Solves `min s  s.t.  F_k(w) + s·I ⪰ 0,  s ≥ −cap,  ‖w‖ ≤ radius`.
/// When `stop_at_strict` is set the solve stops at the first centered point
/// with `s < 0`.
pub fn find_interior_point(
    blocks: &[Lmi],
    nvars: usize,
    radius: f64,
    feas_tol: f64,
    stop_at_strict: bool,
) -> Result<InteriorPoint> {
    let scale = blocks
        .iter()
        .map(|b| b.constant.amax())
        .fold(1.0_f64, f64::max);
    let cap = scale;
    let n = nvars + 1;
    let mut aug: Vec<Lmi> = blocks
        .iter()
        .map(|b| {
            let mut coeffs = b.coeffs.clone();
            coeffs.push(DMatrix::identity(b.dim(), b.dim()));
            Lmi {
                constant: b.constant.clone(),
                coeffs,
            }
        })
        .collect();
    // s + cap ≥ 0
    let mut cap_coeffs = vec![DMatrix::zeros(1, 1); n];
    cap_coeffs[nvars][(0, 0)] = 1.0;
    aug.push(Lmi {
        constant: DMatrix::from_element(1, 1, cap),
        coeffs: cap_coeffs,
    });
    if nvars > 0 {
        // [[R, wᵀ], [w, R·I]] ⪰ 0  ⇔  ‖w‖ ≤ R
        let d = nvars + 1;
        let coeffs = (0..n)
            .map(|i| {
                let mut c = DMatrix::zeros(d, d);
                if i < nvars {
                    c[(0, i + 1)] = 1.0;
                    c[(i + 1, 0)] = 1.0;
                }
                c
            })
            .collect();
        aug.push(Lmi {
            constant: DMatrix::identity(d, d) * radius,
            coeffs,
        });
    }
    let s0 = blocks
        .iter()
        .map(|b| -b.constant.clone().symmetric_eigen().eigenvalues.min())
        .fold(-cap * 0.5, f64::max)
        + 0.5 * cap;
    let mut start = DVector::zeros(n);
    start[nvars] = s0;
    let mut lin = DVector::zeros(n);
    lin[nvars] = 1.0;
    let problem = LmiProblem {
        quad: DMatrix::zeros(n, n),
        lin,
        offset: 0.0,
        blocks: aug,
    };
    let opts = BarrierOptions {
        t0: 1.0 / cap,
        gap_tol: feas_tol * 1e-2,
        ..BarrierOptions::default()
    };
    let strict = move |w: &DVector<f64>| w[nvars] < 0.0;
    let sol = minimize_barrier(
        &problem,
        &start,
        &opts,
        if stop_at_strict { Some(&strict) } else { None },
    )?;
    let s = sol.w[nvars];
    Ok(InteriorPoint {
        w: sol.w.rows(0, nvars).into_owned(),
        margin: -s,
        certified_infeasible: sol.converged && s - sol.gap_bound > feas_tol,
    })
}

/// One PSD cone block `M(z) = offset + Σ coef·z[index]` placed symmetrically.
#[derive(Clone, Debug)]
pub struct ConeBlock {
    pub dim: usize,
    pub offset: DMatrix<f64>,
    /// `(row, col, z index, coefficient)` with `row ≤ col`.
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl ConeBlock {
    pub fn matrix(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.offset.clone();
        for &(r, c, k, coef) in &self.entries {
            m[(r, c)] += coef * z[k];
            if r != c {
                m[(c, r)] += coef * z[k];
            }
        }
        m
    }

    fn linear_part(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, k, coef) in &self.entries {
            m[(r, c)] += coef * v[k];
            if r != c {
                m[(c, r)] += coef * v[k];
            }
        }
        m
    }
}

/// Equality-form conic program.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub quad: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub constant: f64,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub cones: Vec<ConeBlock>,
    /// Optional strictly feasible point satisfying the equalities.
    pub interior_hint: Option<DVector<f64>>,
}

impl ConicProgram {
    pub fn nz(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.quad * z)) + self.lin.dot(z) + self.constant
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::NearOptimal => "NEAR_OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::NumericalFailure => "NUMERICAL_FAILURE",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub feas_tol: f64,
    /// Relative to `max(|objective|, reference)` where the reference is the
    /// objective's constant term (or 1 when it vanishes).
    pub gap_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            gap_tol: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub z: DVector<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub gap_bound: f64,
    pub min_eigenvalues: Vec<f64>,
    pub eq_residual: f64,
    pub newton_iterations: usize,
}

struct Reduced {
    z0: DVector<f64>,
    basis: DMatrix<f64>,
}

fn eliminate_equalities(a: &DMatrix<f64>, b: &DVector<f64>, nz: usize) -> Result<Reduced> {
    if a.nrows() == 0 {
        return Ok(Reduced {
            z0: DVector::zeros(nz),
            basis: DMatrix::identity(nz, nz),
        });
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank_tol = 1e-12 * smax.max(1.0);
    let z0 = svd
        .solve(b, rank_tol)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let resid = (a * &z0 - b).amax();
    if resid > 1e-9 * (1.0 + b.amax()) {
        return Err(Error::Infeasible(format!(
            "equality constraints are inconsistent (residual {resid:.3e})"
        )));
    }
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut proj = DMatrix::<f64>::identity(nz, nz);
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > rank_tol {
            let v = v_t.row(k).transpose();
            proj -= &v * v.transpose();
        }
    }
    let eig = proj.symmetric_eigen();
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        DMatrix::zeros(nz, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    Ok(Reduced { z0, basis })
}

fn reduce(program: &ConicProgram, red: &Reduced) -> LmiProblem {
    let n = red.basis.ncols();
    let pn = &program.quad * &red.basis;
    let quad = red.basis.transpose() * &pn;
    let lin = red.basis.transpose() * (&program.quad * &red.z0 + &program.lin);
    let offset = program.objective(&red.z0);
    let blocks = program
        .cones
        .iter()
        .map(|c| Lmi {
            constant: c.matrix(&red.z0),
            coeffs: (0..n)
                .map(|i| c.linear_part(&red.basis.column(i).into_owned()))
                .collect(),
        })
        .collect();
    LmiProblem {
        quad: 0.5 * (&quad + quad.transpose()),
        lin,
        offset,
        blocks,
    }
}

/// Solve an equality-form conic program.
///
/// Returns `Ok` with status `OPTIMAL` or `NEAR_OPTIMAL`; infeasibility with a
/// phase-I certificate is `Error::Infeasible`, every other breakdown is
/// `Error::NumericalFailure`.
pub fn solve_conic(program: &ConicProgram, tol: &Tolerances) -> Result<ConicSolution> {
    let nz = program.nz();
    let red = eliminate_equalities(&program.eq_matrix, &program.eq_rhs, nz)?;
    let lmi = reduce(program, &red);
    let n = lmi.nvars();

    let hint = program.interior_hint.as_ref().and_then(|zh| {
        let w = red.basis.transpose() * (zh - &red.z0);
        barrier_value(&lmi.blocks, &w).map(|_| w)
    });
    let start = match hint {
        Some(w) => w,
        None => {
            let radius = 1e6 * (1.0 + red.z0.amax());
            let ip = find_interior_point(&lmi.blocks, n, radius, tol.feas_tol, true)?;
            if ip.certified_infeasible {
                return Err(Error::Infeasible(format!(
                    "no point satisfies the cone constraints (best margin {:.3e})",
                    ip.margin
                )));
            }
            if ip.margin <= 0.0 {
                return Err(Error::NumericalFailure(format!(
                    "could not find a strictly feasible point (best margin {:.3e})",
                    ip.margin
                )));
            }
            ip.w
        }
    };

    let reference = if program.constant.abs() > 0.0 {
        program.constant.abs()
    } else {
        1.0
    };
    let opts = BarrierOptions {
        gap_tol: tol.gap_tol * reference,
        ..BarrierOptions::default()
    };
    let sol = minimize_barrier(&lmi, &start, &opts, None)?;
    let z = &red.z0 + &red.basis * &sol.w;
    let min_eigenvalues: Vec<f64> = program
        .cones
        .iter()
        .map(|c| c.matrix(&z).symmetric_eigen().eigenvalues.min())
        .collect();
    let eq_residual = if program.eq_matrix.nrows() == 0 {
        0.0
    } else {
        (&program.eq_matrix * &z - &program.eq_rhs).amax()
    };
    let scale = sol.objective.abs().max(reference);
    let status = if sol.converged && sol.gap_bound <= tol.gap_tol * scale {
        SolveStatus::Optimal
    } else if sol.gap_bound <= tol.gap_tol.sqrt() * scale {
        SolveStatus::NearOptimal
    } else {
        return Err(Error::NumericalFailure(format!(
            "barrier stopped with gap bound {:.3e} after {} Newton steps",
            sol.gap_bound, sol.newton_iterations
        )));
    };
    if min_eigenvalues.iter().any(|&l| l < -tol.feas_tol)
        || eq_residual > tol.feas_tol * (1.0 + z.amax())
    {
        return Err(Error::NumericalFailure(format!(
            "solution violates constraints (min eigenvalue {:.3e}, equality residual {:.3e})",
            min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
            eq_residual
        )));
    }
    Ok(ConicSolution {
        objective: program.objective(&z),
        z,
        status,
        gap_bound: sol.gap_bound,
        min_eigenvalues,
        eq_residual,
        newton_iterations: sol.newton_iterations,
    })
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub z: DVector<f64>,
    /// Optimal smallest-eigenvalue margin over all cone blocks (capped at the
    /// problem scale). Negative means no point satisfies the cones.
    pub margin: f64,
    pub certified_infeasible: bool,
}

/// Phase I on an equality-form program; the objective is ignored.
pub fn feasibility_margin(program: &ConicProgram, tol: &Tolerances) -> Result<FeasibilityReport> {
    let nz = program.nz();
    let red = eliminate_equalities(&program.eq_matrix, &program.eq_rhs, nz)?;
    let lmi = reduce(program, &red);
    let radius = 1e6 * (1.0 + red.z0.amax());
    let ip = find_interior_point(&lmi.blocks, lmi.nvars(), radius, tol.feas_tol, false)?;
    Ok(FeasibilityReport {
        z: &red.z0 + &red.basis * &ip.w,
        margin: ip.margin,
        certified_infeasible: ip.certified_infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_block(offset: f64, idx: usize, coef: f64) -> ConeBlock {
        ConeBlock {
            dim: 1,
            offset: DMatrix::from_element(1, 1, offset),
            entries: vec![(0, 0, idx, coef)],
        }
    }

    #[test]
    fn projection_onto_halfline() {
        // min (z − 3)²  s.t.  z ≥ 5
        let program = ConicProgram {
            quad: DMatrix::from_element(1, 1, 2.0),
            lin: DVector::from_element(1, -6.0),
            constant: 9.0,
            eq_matrix: DMatrix::zeros(0, 1),
            eq_rhs: DVector::zeros(0),
            cones: vec![scalar_block(-5.0, 0, 1.0)],
            interior_hint: None,
        };
        let sol = solve_conic(&program, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.z[0] - 5.0).abs() < 1e-8, "{}", sol.z[0]);
    }

    #[test]
    fn nearest_psd_matrix_with_fixed_trace() {
        // min ‖X − diag(1, −1)‖²  s.t. X ⪰ 0, X₀₀ + X₁₁ = 1  ⇒ X = diag(1, 0)
        // z = (X00, X01, X11)
        let quad = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0, 2.0]));
        let lin = DVector::from_vec(vec![-2.0, 0.0, 2.0]);
        let program = ConicProgram {
            quad,
            lin,
            constant: 2.0,
            eq_matrix: DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]),
            eq_rhs: DVector::from_element(1, 1.0),
            cones: vec![ConeBlock {
                dim: 2,
                offset: DMatrix::zeros(2, 2),
                entries: vec![(0, 0, 0, 1.0), (0, 1, 1, 1.0), (1, 1, 2, 1.0)],
            }],
            interior_hint: None,
        };
        let sol = solve_conic(&program, &Tolerances::default()).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-5, "{:?}", sol.z);
        assert!(sol.z[1].abs() < 1e-5);
        assert!(sol.z[2].abs() < 1e-5);
        assert!(sol.min_eigenvalues[0] >= -1e-9);
    }

    #[test]
    fn infeasible_program_is_certified() {
        // z ≥ 1 and z ≤ −1
        let program = ConicProgram {
            quad: DMatrix::zeros(1, 1),
            lin: DVector::zeros(1),
            constant: 0.0,
            eq_matrix: DMatrix::zeros(0, 1),
            eq_rhs: DVector::zeros(0),
            cones: vec![scalar_block(-1.0, 0, 1.0), scalar_block(-1.0, 0, -1.0)],
            interior_hint: None,
        };
        assert!(matches!(
            solve_conic(&program, &Tolerances::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let program = ConicProgram {
            quad: DMatrix::zeros(1, 1),
            lin: DVector::zeros(1),
            constant: 0.0,
            eq_matrix: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            eq_rhs: DVector::from_vec(vec![1.0, 2.0]),
            cones: vec![],
            interior_hint: None,
        };
        assert!(matches!(
            solve_conic(&program, &Tolerances::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn phase_one_margin_of_fixed_matrix() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let ip = find_interior_point(
            &[Lmi {
                constant: f,
                coeffs: vec![],
            }],
            0,
            1.0,
            1e-9,
            false,
        )
        .unwrap();
        assert!((ip.margin - 1.0).abs() < 1e-8, "{}", ip.margin);
        assert!(!ip.certified_infeasible);
    }
}
