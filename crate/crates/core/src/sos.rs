//! Least-squares polynomial fitting under positivity and monotonicity
//! constraints, certified with sum-of-squares multipliers.
//!
//! A polynomial `p` of degree `d` is nondecreasing on `[0, ∞)` with slope at
//! least `ε` when
//!
//! ```text
//! p′(x) − ε = t(x) + x·s(x),    t, s sums of squares,
//! ```
//!
//! and each sum of squares is represented by a positive semidefinite Gram
//! matrix. Together with `p(0) ≥ pos_tol` this gives a small semidefinite
//! program whose objective is the least-squares residual.
//!
//! Internally the program is posed on `[0, 1]` after normalization, with
//! both `p` and the Gram bases in shifted Chebyshev polynomials; monomial
//! designs of order ten are too ill-conditioned for the interior-point
//! iterations to reach full accuracy. Results are reported in monomials
//! `(1, x, …, x^{dim−1})` of the original variable.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConeBlock, ConicProgram, SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::poly::{exact_monotone_check, Polynomial};

/// Fits above this degree are refused; beyond order ten the programs become
/// numerically fragile.
pub const MAX_DEGREE: usize = 12;

/// Default strict-positivity margin on the derivative, in W per N·m.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Torque/loss samples at one motor speed.
#[derive(Clone, Debug, PartialEq)]
pub struct FitDataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl FitDataset {
    /// Validates and deduplicates samples; repeated `x` values are merged by
    /// averaging their `y`.
    pub fn new(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples.into_iter().collect();
        for &(x, y) in &pts {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::DegenerateData("non-finite sample".into()));
            }
            if x < 0.0 {
                return Err(Error::DegenerateData(format!(
                    "torque samples must be nonnegative, got {x}"
                )));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pts.len());
        let mut ys: Vec<f64> = Vec::with_capacity(pts.len());
        let mut count = 0usize;
        for (x, y) in pts {
            if xs.last() == Some(&x) {
                count += 1;
                let last = ys.last_mut().unwrap();
                *last += (y - *last) / count as f64;
            } else {
                xs.push(x);
                ys.push(y);
                count = 1;
            }
        }
        if xs.len() < 2 {
            return Err(Error::DegenerateData(format!(
                "need at least 2 distinct torque values, got {}",
                xs.len()
            )));
        }
        Ok(Self { xs, ys })
    }

    /// Reads `torque_nm,loss_w` rows.
    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
        if header.len() != 2 || &header[0] != "torque_nm" || &header[1] != "loss_w" {
            return Err(perr(1, "expected header torque_nm,loss_w".into()));
        }
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| perr(line, format!("not a number: {:?}", &rec[i])))
            };
            pts.push((num(0)?, num(1)?));
        }
        Self::new(pts)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv_str(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn max_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn rmse(&self, p: &Polynomial) -> f64 {
        let ss: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| (y - p.eval(x)).powi(2))
            .sum();
        (ss / self.len() as f64).sqrt()
    }

    fn scales(&self) -> (f64, f64) {
        let xs = self.max_x();
        let ys = self.ys.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
        (xs, if ys > 0.0 { ys } else { 1.0 })
    }

    /// `1e-6 · median(y)`, falling back to `1e-6 · max|y|` for nonpositive medians.
    pub fn default_pos_tol(&self) -> f64 {
        let mut ys = self.ys.clone();
        ys.sort_by(|a, b| a.total_cmp(b));
        let n = ys.len();
        let median = if n % 2 == 1 {
            ys[n / 2]
        } else {
            0.5 * (ys[n / 2 - 1] + ys[n / 2])
        };
        if median > 0.0 {
            1e-6 * median
        } else {
            1e-6 * self.scales().1
        }
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    if degree > MAX_DEGREE {
        return Err(Error::DegreeCap {
            degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GramRole {
    /// Certifies `t(x)`.
    TBlock,
    /// Certifies `s(x)`, the multiplier of `x`.
    SBlock,
}

/// Symmetric Gram matrix `Q` of `q(x) = m(x)ᵀ Q m(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBlock {
    pub role: GramRole,
    pub entries: DMatrix<f64>,
}

impl GramBlock {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Coefficient of `x^j` is the sum of `Q[a][b]` over `a + b = j`.
    pub fn polynomial(&self) -> Polynomial {
        let n = self.dim();
        if n == 0 {
            return Polynomial::zero();
        }
        let mut c = vec![0.0; 2 * n - 1];
        for a in 0..n {
            for b in 0..n {
                c[a + b] += self.entries[(a, b)];
            }
        }
        Polynomial::new(c)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.entries.clone().symmetric_eigen().eigenvalues.min()
    }
}

/// Where a Gram block's upper triangle lives in the decision vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GramLayout {
    pub role: GramRole,
    pub dim: usize,
    pub offset: usize,
}

impl GramLayout {
    fn entry_count(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// `(row, col, z index)` for the upper triangle, row-major.
    fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let dim = self.dim;
        (0..dim)
            .flat_map(move |a| (a..dim).map(move |b| (a, b)))
            .enumerate()
            .map(move |(k, (a, b))| (a, b, self.offset + k))
    }
}

/// Gram block dimensions `(T, S)` for a derivative of the given degree.
///
/// Even degree `2k`: `deg t ≤ 2k`, `deg s ≤ 2k − 2`. Odd degree `2k + 1`:
/// `deg t ≤ 2k`, `deg s ≤ 2k`.
pub fn gram_dims(derivative_degree: usize) -> (usize, usize) {
    let k = derivative_degree / 2;
    if derivative_degree % 2 == 0 {
        (k + 1, k)
    } else {
        (k + 1, k + 1)
    }
}

/// The assembled semidefinite program for one pseudoconvex fit.
///
/// All internal quantities are in normalized units: `u = x / x_scale`,
/// `v = y / y_scale`. The decision vector is
/// `z = (a₀ … a_d, upper(T), upper(S))`, coefficients in the shifted
/// Chebyshev basis.
#[derive(Clone, Debug)]
pub struct SosProgram {
    pub degree: usize,
    /// Derivative margin in original units.
    pub epsilon: f64,
    /// Lower bound on `p(0)` in original units.
    pub pos_tol: f64,
    pub x_scale: f64,
    pub y_scale: f64,
    pub t_block: GramLayout,
    pub s_block: Option<GramLayout>,
    pub conic: ConicProgram,
    /// Normalized design matrix and targets, used to polish the solution.
    vand: DMatrix<f64>,
    targets: DVector<f64>,
}

impl SosProgram {
    pub fn decision_dim(&self) -> usize {
        self.conic.nz()
    }

    pub fn num_equalities(&self) -> usize {
        self.conic.eq_matrix.nrows()
    }

    pub fn t_dim(&self) -> usize {
        self.t_block.dim
    }

    pub fn s_dim(&self) -> usize {
        self.s_block.map_or(0, |b| b.dim)
    }
}

/// Build the program with the default positivity tolerance.
pub fn build_sos_program(data: &FitDataset, degree: usize, epsilon: f64) -> Result<SosProgram> {
    build_sos_program_with(data, degree, epsilon, data.default_pos_tol())
}

pub fn build_sos_program_with(
    data: &FitDataset,
    degree: usize,
    epsilon: f64,
    pos_tol: f64,
) -> Result<SosProgram> {
    check_degree(degree)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    let (xs, ys) = data.scales();
    let eps_s = epsilon * xs / ys;
    let pos_s = pos_tol / ys;

    let ncoef = degree + 1;
    let (t_dim, s_dim) = gram_dims(degree - 1);
    let t_block = GramLayout {
        role: GramRole::TBlock,
        dim: t_dim,
        offset: ncoef,
    };
    let s_block = (s_dim > 0).then(|| GramLayout {
        role: GramRole::SBlock,
        dim: s_dim,
        offset: ncoef + t_block.entry_count(),
    });
    let nz = ncoef + t_block.entry_count() + s_block.map_or(0, |b| b.entry_count());

    // p′(u) − ε = t(u) + u·s(u), one row per basis function up to deg p′.
    // Everything is expressed in shifted Chebyshev polynomials on [0, 1].
    let neq = degree;
    let mut a = DMatrix::zeros(neq, nz);
    let mut b = DVector::zeros(neq);
    let deriv = cheb_derivative(ncoef);
    for j in 0..neq {
        for k in 0..ncoef {
            a[(j, k)] = deriv[(j, k)];
        }
    }
    b[0] = eps_s;
    for (r, c, k) in t_block.entries() {
        let mult = if r == c { 1.0 } else { 2.0 };
        for (j, w) in cheb_product(r, c) {
            a[(j, k)] -= mult * w;
        }
    }
    if let Some(sb) = &s_block {
        for (r, c, k) in sb.entries() {
            let mult = if r == c { 1.0 } else { 2.0 };
            for (i, w) in cheb_product(r, c) {
                for (j, v) in cheb_times_u(i) {
                    a[(j, k)] -= mult * w * v;
                }
            }
        }
    }

    // mean squared residual in normalized units
    let n = data.len() as f64;
    let mut vand = DMatrix::zeros(data.len(), ncoef);
    let mut v = DVector::zeros(data.len());
    for (i, (&x, &y)) in data.xs().iter().zip(data.ys()).enumerate() {
        for (j, cj) in cheb_values(x / xs, ncoef).into_iter().enumerate() {
            vand[(i, j)] = cj;
        }
        v[i] = y / ys;
    }
    let mut quad = DMatrix::zeros(nz, nz);
    quad.view_mut((0, 0), (ncoef, ncoef))
        .copy_from(&(vand.transpose() * &vand * (2.0 / n)));
    let mut lin = DVector::zeros(nz);
    lin.rows_mut(0, ncoef)
        .copy_from(&(vand.transpose() * &v * (-2.0 / n)));
    let constant = v.norm_squared() / n;

    let gram_cone = |layout: &GramLayout| ConeBlock {
        dim: layout.dim,
        offset: DMatrix::zeros(layout.dim, layout.dim),
        entries: layout.entries().map(|(r, c, k)| (r, c, k, 1.0)).collect(),
    };
    let mut cones = vec![gram_cone(&t_block)];
    if let Some(sb) = &s_block {
        cones.push(gram_cone(sb));
    }
    // p(0) = Σ a_k C_k(0) = Σ (−1)^k a_k
    cones.push(ConeBlock {
        dim: 1,
        offset: DMatrix::from_element(1, 1, -pos_s),
        entries: (0..ncoef).map(|k| (0, 0, k, alternating(k))).collect(),
    });

    let hint = interior_hint(&a, &b, ncoef, &t_block, s_block.as_ref(), pos_s);

    Ok(SosProgram {
        degree,
        epsilon,
        pos_tol,
        x_scale: xs,
        y_scale: ys,
        t_block,
        s_block,
        conic: ConicProgram {
            quad,
            lin,
            constant,
            eq_matrix: a,
            eq_rhs: b,
            cones,
            interior_hint: Some(hint),
        },
        vand,
        targets: v,
    })
}

/// Gram blocks `0.1·I`, coefficients implied by the matching identity.
fn interior_hint(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    ncoef: usize,
    t_block: &GramLayout,
    s_block: Option<&GramLayout>,
    pos_s: f64,
) -> DVector<f64> {
    const DIAG: f64 = 0.1;
    let mut z = DVector::zeros(a.ncols());
    for layout in std::iter::once(t_block).chain(s_block) {
        for (r, c, k) in layout.entries() {
            if r == c {
                z[k] = DIAG;
            }
        }
    }
    // the derivative map is upper triangular in a_1..a_d: back substitute
    let rhs = b - a * &z;
    let neq = a.nrows();
    for j in (0..neq).rev() {
        let mut acc = rhs[j];
        for k in (j + 2)..ncoef {
            acc -= a[(j, k)] * z[k];
        }
        z[j + 1] = acc / a[(j, j + 1)];
    }
    let tail: f64 = (1..ncoef).map(|k| alternating(k) * z[k]).sum();
    z[0] = pos_s.max(0.0) + DIAG - tail;
    z
}

fn alternating(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `C_0(u) … C_{n−1}(u)` with `C_k(u) = T_k(2u − 1)`.
fn cheb_values(u: f64, n: usize) -> Vec<f64> {
    let x = 2.0 * u - 1.0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * out[k - 1] - out[k - 2],
        };
        out.push(v);
    }
    out
}

/// Row `k` holds the monomial coefficients (in `u`) of `C_k`.
fn cheb_to_monomial(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if n == 0 {
        return m;
    }
    m[(0, 0)] = 1.0;
    if n > 1 {
        m[(1, 0)] = -1.0;
        m[(1, 1)] = 2.0;
    }
    for k in 2..n {
        for j in 0..k {
            // 2(2u − 1)·C_{k−1} − C_{k−2}
            let c = m[(k - 1, j)];
            m[(k, j + 1)] += 4.0 * c;
            m[(k, j)] -= 2.0 * c + m[(k - 2, j)];
        }
    }
    m
}

/// `(n−1) × n` map from coefficients of `p` to those of `dp/du`.
fn cheb_derivative(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n.saturating_sub(1), n);
    for k in 1..n {
        for j in (0..k).rev().step_by(2) {
            let w = if j == 0 { 1.0 } else { 2.0 };
            // T_k′ = Σ (2k / c_j) T_j over j < k with k − j odd; ×2 from 2u − 1
            d[(j, k)] = 2.0 * w * k as f64;
        }
    }
    d
}

/// `C_i·C_j = (C_{i+j} + C_{|i−j|}) / 2`.
fn cheb_product(i: usize, j: usize) -> [(usize, f64); 2] {
    [(i + j, 0.5), (i.abs_diff(j), 0.5)]
}

/// `u·C_k = C_k / 2 + (C_{k+1} + C_{|k−1|}) / 4`.
fn cheb_times_u(k: usize) -> [(usize, f64); 3] {
    [(k, 0.5), (k + 1, 0.25), (k.abs_diff(1), 0.25)]
}

/// Moves an interior-point solution toward the least-squares coefficients,
/// compensating in the Gram entries with the least-norm correction, and keeps
/// the longest halving step that stays in every cone and lowers the residual.
///
/// The barrier iterates stall in the nearly flat directions of an
/// ill-conditioned design matrix; when the shape constraints are slack this
/// recovers the accuracy of a direct least-squares solve.
fn polish(program: &SosProgram, z: DVector<f64>) -> DVector<f64> {
    let ncoef = program.degree + 1;
    let nz = z.len();
    let svd = program.vand.clone().svd(true, true);
    let Ok(target) = svd.solve(&program.targets, 1e-14 * svd.singular_values.max()) else {
        return z;
    };
    let dc = &target - z.rows(0, ncoef);
    if dc.amax() == 0.0 {
        return z;
    }
    let a = &program.conic.eq_matrix;
    let a_gram = a.columns(ncoef, nz - ncoef).into_owned();
    let rhs = -(a.columns(0, ncoef) * &dc);
    let gsvd = a_gram.svd(true, true);
    let Ok(dg) = gsvd.solve(&rhs, 1e-12 * gsvd.singular_values.max()) else {
        return z;
    };
    let mut dz = DVector::zeros(nz);
    dz.rows_mut(0, ncoef).copy_from(&dc);
    dz.rows_mut(ncoef, nz - ncoef).copy_from(&dg);

    let residual = |z: &DVector<f64>| (&program.vand * z.rows(0, ncoef) - &program.targets).norm_squared();
    let in_cones = |z: &DVector<f64>| {
        program
            .conic
            .cones
            .iter()
            .all(|c| c.matrix(z).cholesky().is_some())
    };
    let r0 = residual(&z);
    let mut alpha = 1.0;
    for _ in 0..40 {
        let cand = &z + &dz * alpha;
        if in_cones(&cand) && residual(&cand) < r0 {
            return cand;
        }
        alpha *= 0.5;
    }
    z
}

/// Solved program mapped back to original units.
#[derive(Clone, Debug)]
pub struct SosSolution {
    pub polynomial: Polynomial,
    pub t_gram: GramBlock,
    pub s_gram: Option<GramBlock>,
    pub status: SolveStatus,
    /// Mean squared residual in normalized units.
    pub objective: f64,
    pub gap_bound: f64,
    pub newton_iterations: usize,
}

/// Solve the program and undo the normalization.
pub fn solve_sos(program: &SosProgram, tol: &Tolerances) -> Result<SosSolution> {
    let mut sol = conic::solve_conic(&program.conic, tol)?;
    sol.z = polish(program, sol.z);
    let (xs, ys) = (program.x_scale, program.y_scale);
    let ncoef = program.degree + 1;
    let to_mono = cheb_to_monomial(ncoef);
    let coeffs: Vec<f64> = (0..ncoef)
        .map(|j| {
            let cu: f64 = (j..ncoef).map(|k| sol.z[k] * to_mono[(k, j)]).sum();
            ys * cu / xs.powi(j as i32)
        })
        .collect();
    let gram = |layout: &GramLayout, factor: f64| {
        let mut q = DMatrix::zeros(layout.dim, layout.dim);
        for (r, c, k) in layout.entries() {
            q[(r, c)] = sol.z[k];
            q[(c, r)] = sol.z[k];
        }
        let basis = cheb_to_monomial(layout.dim);
        let mut m = basis.transpose() * q * basis;
        for r in 0..layout.dim {
            for c in 0..layout.dim {
                m[(r, c)] *= factor / xs.powi((r + c) as i32);
            }
        }
        GramBlock {
            role: layout.role,
            entries: m,
        }
    };
    Ok(SosSolution {
        polynomial: Polynomial::new(coeffs),
        t_gram: gram(&program.t_block, ys / xs),
        s_gram: program.s_block.as_ref().map(|l| gram(l, ys / (xs * xs))),
        status: sol.status,
        objective: sol.objective,
        gap_bound: sol.gap_bound,
        newton_iterations: sol.newton_iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub degree: usize,
    pub polynomial: Polynomial,
    pub rmse: f64,
    pub solver_status: SolveStatus,
    pub min_derivative_on_range: f64,
    pub monotone_on_range: bool,
    pub constrained: bool,
    pub epsilon: f64,
    pub x_scale: f64,
    pub y_scale: f64,
}

/// Flat JSON form of a single fit; coefficients in original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub rmse: f64,
    pub min_derivative: f64,
    pub status: SolveStatus,
    pub epsilon: f64,
    pub x_scale: f64,
    pub y_scale: f64,
}

impl FitReport {
    pub fn to_fit_json(&self) -> FitJson {
        FitJson {
            degree: self.degree,
            coeffs: self.polynomial.coeffs().to_vec(),
            rmse: self.rmse,
            min_derivative: self.min_derivative_on_range,
            status: self.solver_status,
            epsilon: self.epsilon,
            x_scale: self.x_scale,
            y_scale: self.y_scale,
        }
    }
}

fn report(
    data: &FitDataset,
    degree: usize,
    polynomial: Polynomial,
    status: SolveStatus,
    constrained: bool,
    epsilon: f64,
) -> Result<FitReport> {
    let (xs, ys) = data.scales();
    let check = exact_monotone_check(&polynomial, 0.0, data.max_x())?;
    Ok(FitReport {
        degree,
        rmse: data.rmse(&polynomial),
        polynomial,
        solver_status: status,
        min_derivative_on_range: check.min_derivative,
        monotone_on_range: check.monotone_nondecreasing,
        constrained,
        epsilon,
        x_scale: xs,
        y_scale: ys,
    })
}

/// Ordinary least squares on normalized data, solved by SVD.
pub fn fit_unconstrained(data: &FitDataset, degree: usize) -> Result<FitReport> {
    check_degree(degree)?;
    if data.len() < degree + 1 {
        warn!(
            "fitting degree {degree} to {} distinct points; solution is not unique",
            data.len()
        );
    }
    let (xs, ys) = data.scales();
    let vand = DMatrix::from_fn(data.len(), degree + 1, |i, j| (data.xs()[i] / xs).powi(j as i32));
    let v = DVector::from_iterator(data.len(), data.ys().iter().map(|y| y / ys));
    let svd = vand.svd(true, true);
    let c = svd
        .solve(&v, 1e-14 * svd.singular_values.max())
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let coeffs = c
        .iter()
        .enumerate()
        .map(|(j, cj)| ys * cj / xs.powi(j as i32))
        .collect();
    report(data, degree, Polynomial::new(coeffs), SolveStatus::Optimal, false, 0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub epsilon: f64,
    /// `None` selects [`FitDataset::default_pos_tol`].
    pub pos_tol: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            pos_tol: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Positive, monotone least-squares fit.
pub fn fit_pseudoconvex(data: &FitDataset, degree: usize, epsilon: f64) -> Result<FitReport> {
    fit_pseudoconvex_with(
        data,
        degree,
        &FitOptions {
            epsilon,
            ..FitOptions::default()
        },
    )
}

pub fn fit_pseudoconvex_with(
    data: &FitDataset,
    degree: usize,
    opts: &FitOptions,
) -> Result<FitReport> {
    let pos_tol = opts.pos_tol.unwrap_or_else(|| data.default_pos_tol());
    let program = build_sos_program_with(data, degree, opts.epsilon, pos_tol)?;
    let sol = solve_sos(&program, &opts.tolerances)?;
    report(data, degree, sol.polynomial, sol.status, true, opts.epsilon)
}

#[derive(Clone, Debug)]
pub struct SosFeasibility {
    pub feasible: bool,
    /// Best achievable smallest Gram eigenvalue (capped); negative when infeasible.
    pub margin: f64,
    pub gram: Option<DMatrix<f64>>,
}

/// Is `g` a sum of squares on all of ℝ? Decided by a single-Gram-block
/// feasibility program (no `x·s` term).
pub fn sos_feasible_global(g: &Polynomial, tol: &Tolerances) -> Result<SosFeasibility> {
    let Some(deg) = g.effective_degree() else {
        return Ok(SosFeasibility {
            feasible: true,
            margin: 0.0,
            gram: None,
        });
    };
    if deg % 2 == 1 {
        return Ok(SosFeasibility {
            feasible: false,
            margin: f64::NEG_INFINITY,
            gram: None,
        });
    }
    let dim = deg / 2 + 1;
    let layout = GramLayout {
        role: GramRole::TBlock,
        dim,
        offset: 0,
    };
    let nz = layout.entry_count();
    let mut a = DMatrix::zeros(deg + 1, nz);
    for (r, c, k) in layout.entries() {
        a[(r + c, k)] = if r == c { 1.0 } else { 2.0 };
    }
    let b = DVector::from_iterator(deg + 1, g.coeffs()[..=deg].iter().copied());
    let program = ConicProgram {
        quad: DMatrix::zeros(nz, nz),
        lin: DVector::zeros(nz),
        constant: 0.0,
        eq_matrix: a,
        eq_rhs: b,
        cones: vec![ConeBlock {
            dim,
            offset: DMatrix::zeros(dim, dim),
            entries: layout.entries().map(|(r, c, k)| (r, c, k, 1.0)).collect(),
        }],
        interior_hint: None,
    };
    let fr = conic::feasibility_margin(&program, tol)?;
    let feasible = !fr.certified_infeasible && fr.margin >= -tol.feas_tol;
    let gram = feasible.then(|| program.cones[0].matrix(&fr.z));
    Ok(SosFeasibility {
        feasible,
        margin: fr.margin,
        gram,
    })
}
