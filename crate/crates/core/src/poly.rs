//! Dense univariate polynomials: evaluation, algebra, real roots and
//! monotonicity checks.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative magnitude below which leading/trailing coefficients are deflated
/// away before root finding.
pub const DEFLATION_REL_TOL: f64 = 1e-12;

/// Default relative tolerance for the monotonicity check.
pub const CHECK_REL_TOL: f64 = 1e-9;

/// A real polynomial stored lowest degree first: `coeffs[j]` multiplies `x^j`.
///
/// The stored length is only a degree bound; the effective degree is derived
/// from the coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Default for Polynomial {
    fn default() -> Self {
        Self::zero()
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            Self::zero()
        } else {
            Self { coeffs }
        }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| {
            &acc * &Self::new(vec![-r, 1.0])
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Degree implied by the storage length.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest power with a nonzero coefficient; `None` for the zero polynomial.
    pub fn effective_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.effective_degree().is_none()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// Running error bound for Horner evaluation at `x`.
    pub fn eval_error_bound(&self, x: f64) -> f64 {
        let ax = x.abs();
        let mag = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs());
        2.0 * self.coeffs.len() as f64 * f64::EPSILON * mag
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// `p(a·x + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = Self::new(vec![b, a]);
        let mut out = Self::zero();
        for &c in self.coeffs.iter().rev() {
            out = &(&out * &lin) + &Self::constant(c);
        }
        out.pad_to(self.degree_bound());
        out
    }

    /// `p(s·x)`, i.e. coefficient `j` multiplied by `s^j`.
    pub fn scale_arg(&self, s: f64) -> Self {
        let mut pow = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * pow;
                    pow *= s;
                    v
                })
                .collect(),
        )
    }

    /// Drop exactly-zero high-order coefficients.
    pub fn trimmed(&self) -> Self {
        match self.effective_degree() {
            Some(d) => Self::new(self.coeffs[..=d].to_vec()),
            None => Self::zero(),
        }
    }

    fn pad_to(&mut self, degree: usize) {
        if self.coeffs.len() < degree + 1 {
            self.coeffs.resize(degree + 1, 0.0);
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[f64], j: usize| v.get(j).copied().unwrap_or(0.0);
        Polynomial::new(
            (0..n)
                .map(|j| get(&self.coeffs, j) + get(&rhs.coeffs, j))
                .collect(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(rhs * -1.0)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * rhs).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Largest accepted imaginary part. `None` selects `1e-8·(1 + max|root|)`.
    pub imag_tol: Option<f64>,
    /// Roots closer than this are reported once.
    pub cluster_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            imag_tol: None,
            cluster_tol: 1e-8,
        }
    }
}

/// Real roots of `p` in `[lo − cluster_tol, hi + cluster_tol]`, ascending.
///
/// Eigenvalues of the companion matrix of the deflated polynomial are taken
/// after rescaling the variable to the interval magnitude, then polished with
/// Newton steps on the original coefficients. Near-real conjugate pairs are
/// kept when their real part is a numerical root (split multiple roots).
pub fn real_roots(p: &Polynomial, lo: f64, hi: f64, opts: &RootOptions) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "root interval must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    if p.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficient".into()));
    }
    let span = lo.abs().max(hi.abs());
    let s = if span > 0.0 { span } else { 1.0 };
    let q = p.scale_arg(s);
    let qmax = q.max_abs_coeff();
    if qmax == 0.0 || !qmax.is_finite() {
        return Err(Error::ZeroPolynomial);
    }
    let thresh = DEFLATION_REL_TOL * qmax;
    let c = q.coeffs();
    let top = c.iter().rposition(|v| v.abs() > thresh).unwrap();
    let bottom = c.iter().position(|v| v.abs() > thresh).unwrap();

    let mut cands: Vec<(f64, bool)> = Vec::new();
    if bottom > 0 {
        cands.push((0.0, false));
    }
    let core = &c[bottom..=top];
    let deg = top - bottom;
    if deg == 1 {
        cands.push((-core[0] / core[1], false));
    } else if deg > 1 {
        let lead = core[deg];
        let companion = DMatrix::from_fn(deg, deg, |i, j| {
            if j == deg - 1 {
                -core[i] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let eigs = companion.complex_eigenvalues();
        let max_mod = eigs.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let tol_u = match opts.imag_tol {
            Some(t) => t / s,
            None => 1e-8 * (1.0 + max_mod * s) / s,
        };
        for z in eigs.iter() {
            if !z.re.is_finite() {
                continue;
            }
            if z.im.abs() <= tol_u {
                cands.push((z.re, false));
            } else if z.im.abs() <= tol_u.sqrt().max(1e3 * tol_u) {
                cands.push((z.re, true));
            }
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    for (u0, needs_residual) in cands {
        let u = polish(&q, u0);
        if needs_residual && q.eval(u).abs() > 64.0 * q.eval_error_bound(u) {
            continue;
        }
        let x = u * s;
        if x >= lo - opts.cluster_tol && x <= hi + opts.cluster_tol {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));

    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(&last) = out.last() {
            let gap = r - last;
            let mid = 0.5 * (r + last);
            let same_cluster = gap <= opts.cluster_tol
                || (gap <= 1e-6 * (1.0 + mid.abs())
                    && p.eval(mid).abs() <= 64.0 * p.eval_error_bound(mid));
            if same_cluster {
                continue;
            }
        }
        out.push(r);
    }
    Ok(out)
}

fn polish(q: &Polynomial, u0: f64) -> f64 {
    let mut u = u0;
    let mut fu = q.eval(u).abs();
    for _ in 0..60 {
        let (v, dv) = q.eval_with_derivative(u);
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let next = u - v / dv;
        let fnext = q.eval(next).abs();
        if !(fnext < fu) {
            break;
        }
        let step = (next - u).abs();
        u = next;
        fu = fnext;
        if step <= 4.0 * f64::EPSILON * u.abs().max(1.0) {
            break;
        }
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub monotone_nondecreasing: bool,
    pub min_derivative: f64,
    /// Where the minimum derivative is attained.
    pub argmin: f64,
    pub max_abs_derivative: f64,
}

/// Exact check that `p` is nondecreasing on `[lo, hi]`.
///
/// The extrema of `p′` lie at roots of `p″` or at the endpoints, so the
/// minimum derivative is found by evaluation at those points only.
pub fn exact_monotone_check(p: &Polynomial, lo: f64, hi: f64) -> Result<MonotoneCheck> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "interval must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let dp = p.derivative();
    let ddp = dp.derivative();
    let mut points = vec![lo, hi];
    match real_roots(&ddp, lo, hi, &RootOptions::default()) {
        Ok(r) => points.extend(r.into_iter().map(|x| x.clamp(lo, hi))),
        Err(Error::ZeroPolynomial) => {}
        Err(e) => return Err(e),
    }
    let mut min_d = f64::INFINITY;
    let mut argmin = lo;
    let mut max_abs = 0.0_f64;
    for &x in &points {
        let d = dp.eval(x);
        max_abs = max_abs.max(d.abs());
        if d < min_d {
            min_d = d;
            argmin = x;
        }
    }
    let check_tol = CHECK_REL_TOL * max_abs;
    Ok(MonotoneCheck {
        monotone_nondecreasing: min_d >= -check_tol,
        min_derivative: min_d,
        argmin,
        max_abs_derivative: max_abs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicConditions {
    pub holds: bool,
    /// `3ac − b²` for `p = a x³ + b x² + c x + d`.
    pub margin: f64,
}

/// Analytic monotonicity conditions for a cubic `a x³ + b x² + c x + d`:
/// `a > 0`, `c > 0` and `b² < 3ac`.
///
/// These characterize cubics increasing on all of ℝ (equivalently, `p′` is a
/// sum of squares). Monotonicity on `[0, ∞)` alone is weaker: `x³ + 3x² + x`
/// fails the conditions but has `p′ > 0` for every `x ≥ 0`.
pub fn cubic_monotone_conditions(p: &Polynomial) -> Result<CubicConditions> {
    let deg = p.effective_degree();
    if deg != Some(3) {
        return Err(Error::WrongDegree {
            expected: 3,
            found: deg,
        });
    }
    let c = p.coeffs();
    let (a, b, c1) = (c[3], c[2], c[1]);
    let margin = 3.0 * a * c1 - b * b;
    Ok(CubicConditions {
        holds: a > 0.0 && c1 > 0.0 && margin > 0.0,
        margin,
    })
}
