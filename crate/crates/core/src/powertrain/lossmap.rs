use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Fraction of the top torque node a query may exceed before it is rejected.
pub const TORQUE_RANGE_SLACK: f64 = 0.01;

/// Tabulated motor losses `P_loss(ω_m, τ_m)` on a rectangular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossMap {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    /// One row per speed.
    losses: Vec<Vec<f64>>,
}

fn check_grid(name: &str, grid: &[f64], min_len: usize) -> Result<()> {
    if grid.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "{name} grid needs at least {min_len} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} grid has non-finite values")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "{name} grid must be strictly ascending ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl LossMap {
    pub fn new(speeds: Vec<f64>, torques: Vec<f64>, losses: Vec<Vec<f64>>) -> Result<Self> {
        check_grid("speed", &speeds, 1)?;
        check_grid("torque", &torques, 2)?;
        if torques[0] < 0.0 {
            return Err(Error::InvalidArgument("torque grid must be nonnegative".into()));
        }
        if losses.len() != speeds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} loss rows for {} speeds",
                losses.len(),
                speeds.len()
            )));
        }
        for (i, row) in losses.iter().enumerate() {
            if row.len() != torques.len() {
                return Err(Error::InvalidArgument(format!(
                    "loss row {i} has {} entries, expected {}",
                    row.len(),
                    torques.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "loss row {i} has invalid value {v}"
                )));
            }
        }
        Ok(Self {
            speeds,
            torques,
            losses,
        })
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn losses(&self) -> &[Vec<f64>] {
        &self.losses
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.losses[i]
    }

    pub fn max_torque(&self) -> f64 {
        *self.torques.last().unwrap()
    }

    pub fn speed_range(&self) -> (f64, f64) {
        (self.speeds[0], *self.speeds.last().unwrap())
    }

    /// Bilinear interpolation at `(ω_m, |τ_m|)`. Speeds outside the grid are
    /// clamped; torques up to 1% past the last node extrapolate linearly.
    pub fn interpolate(&self, omega: f64, tau: f64) -> Result<f64> {
        let t = tau.abs();
        check_torque(t, self.max_torque())?;
        let (i0, i1, ws) = bracket(&self.speeds, clamp_speed(omega, &self.speeds));
        let (j0, j1, wt) = bracket(&self.torques, t);
        let lerp = |row: &[f64]| row[j0] + wt * (row[j1] - row[j0]);
        let a = lerp(&self.losses[i0]);
        if i0 == i1 {
            return Ok(a);
        }
        let b = lerp(&self.losses[i1]);
        Ok(a + ws * (b - a))
    }

    /// Reads the wide form (`omega_radps,<τ…>` header) or the long form
    /// (`omega_radps,torque_nm,loss_w`).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: source.to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            records.push((line, rec));
        }
        let Some((hline, header)) = records.first() else {
            return Err(parse_err(source, 1, "empty loss map"));
        };
        let head: Vec<&str> = header.iter().collect();
        if head.first().copied() != Some("omega_radps") {
            return Err(parse_err(source, *hline, "first header column must be omega_radps"));
        }
        if head.len() == 3 && head[1] == "torque_nm" && head[2] == "loss_w" {
            return Self::from_long_records(&records[1..], source);
        }
        let torques = head[1..]
            .iter()
            .map(|s| parse_num(s, source, *hline))
            .collect::<Result<Vec<_>>>()?;
        let mut speeds = Vec::new();
        let mut losses = Vec::new();
        for (line, rec) in &records[1..] {
            if rec.iter().all(|s| s.is_empty()) {
                continue;
            }
            if rec.len() != head.len() {
                return Err(parse_err(
                    source,
                    *line,
                    &format!("expected {} fields, found {}", head.len(), rec.len()),
                ));
            }
            let vals = rec
                .iter()
                .map(|s| parse_num(s, source, *line))
                .collect::<Result<Vec<_>>>()?;
            speeds.push(vals[0]);
            losses.push(vals[1..].to_vec());
        }
        Self::new(speeds, torques, losses).map_err(|e| parse_err(source, 0, &e.to_string()))
    }

    fn from_long_records(records: &[(usize, csv::StringRecord)], source: &str) -> Result<Self> {
        let mut triples = Vec::with_capacity(records.len());
        for (line, rec) in records {
            if rec.iter().all(|s| s.is_empty()) {
                continue;
            }
            if rec.len() != 3 {
                return Err(parse_err(
                    source,
                    *line,
                    &format!("expected 3 fields, found {}", rec.len()),
                ));
            }
            let w = parse_num(&rec[0], source, *line)?;
            let t = parse_num(&rec[1], source, *line)?;
            let p = parse_num(&rec[2], source, *line)?;
            triples.push((*line, w, t, p));
        }
        let mut speeds: Vec<f64> = triples.iter().map(|r| r.1).collect();
        let mut torques: Vec<f64> = triples.iter().map(|r| r.2).collect();
        for g in [&mut speeds, &mut torques] {
            g.sort_by(f64::total_cmp);
            g.dedup();
        }
        let mut losses = vec![vec![f64::NAN; torques.len()]; speeds.len()];
        for &(line, w, t, p) in &triples {
            let i = speeds.partition_point(|&s| s < w);
            let j = torques.partition_point(|&s| s < t);
            if !losses[i][j].is_nan() {
                return Err(parse_err(source, line, "duplicate grid node"));
            }
            losses[i][j] = p;
        }
        if losses.iter().flatten().any(|v| v.is_nan()) {
            return Err(parse_err(source, 0, "long-form map does not cover the full grid"));
        }
        Self::new(speeds, torques, losses).map_err(|e| parse_err(source, 0, &e.to_string()))
    }

    /// Wide-form CSV text.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("omega_radps");
        for t in &self.torques {
            out.push(',');
            out.push_str(&t.to_string());
        }
        out.push('\n');
        for (w, row) in self.speeds.iter().zip(&self.losses) {
            out.push_str(&w.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn parse_err(path: &str, line: usize, msg: &str) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.to_string(),
    }
}

fn parse_num(s: &str, path: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(path, line, &format!("not a number: {s:?}")))
}

pub(crate) fn check_torque(t: f64, tmax: f64) -> Result<()> {
    if !t.is_finite() || t > tmax * (1.0 + TORQUE_RANGE_SLACK) {
        return Err(Error::OutOfRange(format!(
            "torque {t} N·m beyond grid maximum {tmax} N·m"
        )));
    }
    Ok(())
}

pub(crate) fn clamp_speed(omega: f64, speeds: &[f64]) -> f64 {
    let (lo, hi) = (speeds[0], *speeds.last().unwrap());
    if omega < lo || omega > hi {
        log::warn!("speed {omega} rad/s outside map range [{lo}, {hi}], clamped");
        omega.clamp(lo, hi)
    } else {
        omega
    }
}

/// Bracketing indices and weight of `x` in an ascending grid; past the last
/// node the last cell is extended.
pub(crate) fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
    let n = grid.len();
    if n == 1 {
        return (0, 0, 0.0);
    }
    let k = grid.partition_point(|&g| g <= x);
    let i = k.clamp(1, n - 1) - 1;
    let (a, b) = (grid[i], grid[i + 1]);
    let w = (x - a) / (b - a);
    if w == 0.0 {
        (i, i, 0.0)
    } else if w == 1.0 {
        (i + 1, i + 1, 0.0)
    } else {
        (i, i + 1, w)
    }
}

/// Free-function form of [`LossMap::interpolate`].
pub fn interpolate_loss(map: &LossMap, omega_m: f64, tau_m: f64) -> Result<f64> {
    map.interpolate(omega_m, tau_m)
}

/// Parametric generators used in place of measured maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SyntheticKind {
    /// `c0 + c_copper·τ² + c_iron·ω + c_windage·ω³`.
    PmsmLike {
        c0: f64,
        c_copper: f64,
        c_iron: f64,
        c_windage: f64,
    },
    /// `c0 + c_iron·ω + c_windage·ω³ + (a1 + a1_speed·ω)·τ − a2·τ² + a3·τ³`,
    /// monotone in τ when `a2² < 3·a1·a3`. The inflection gives the
    /// concave/convex transition behind the switching torque.
    CubicInflection {
        c0: f64,
        c_iron: f64,
        c_windage: f64,
        a1: f64,
        #[serde(default)]
        a1_speed: f64,
        a2: f64,
        a3: f64,
    },
}

impl SyntheticKind {
    /// Loss polynomial in τ at speed ω.
    pub fn slice(&self, omega: f64) -> Polynomial {
        match *self {
            SyntheticKind::PmsmLike {
                c0,
                c_copper,
                c_iron,
                c_windage,
            } => Polynomial::new(vec![c0 + c_iron * omega + c_windage * omega.powi(3), 0.0, c_copper]),
            SyntheticKind::CubicInflection {
                c0,
                c_iron,
                c_windage,
                a1,
                a1_speed,
                a2,
                a3,
            } => Polynomial::new(vec![
                c0 + c_iron * omega + c_windage * omega.powi(3),
                a1 + a1_speed * omega,
                -a2,
                a3,
            ]),
        }
    }

    pub fn eval(&self, omega: f64, tau: f64) -> f64 {
        self.slice(omega).eval(tau.abs())
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SyntheticKind::PmsmLike {
                c0,
                c_copper,
                c_iron,
                c_windage,
            } => [c0, c_copper, c_iron, c_windage].iter().all(|c| *c >= 0.0),
            SyntheticKind::CubicInflection {
                c0,
                c_iron,
                c_windage,
                a1,
                a1_speed,
                a2,
                a3,
            } => {
                [c0, c_iron, c_windage, a1, a1_speed, a2, a3].iter().all(|c| *c >= 0.0)
                    && a2 * a2 < 3.0 * a1 * a3
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "synthetic map coefficients invalid: {self:?}"
            )))
        }
    }
}

/// Evenly spaced grid `start, start+step, …` up to and including `stop`.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && stop >= start);
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

pub fn generate_synthetic_map(kind: &SyntheticKind, speeds: &[f64], torques: &[f64]) -> Result<LossMap> {
    kind.validate()?;
    map_from_slices(speeds, torques, |w| kind.slice(w))
}

/// Tabulates one polynomial per speed on the torque grid.
pub fn map_from_slices(
    speeds: &[f64],
    torques: &[f64],
    slice: impl Fn(f64) -> Polynomial,
) -> Result<LossMap> {
    let losses = speeds
        .iter()
        .map(|&w| {
            let p = slice(w);
            torques.iter().map(|&t| p.eval(t)).collect()
        })
        .collect();
    LossMap::new(speeds.to_vec(), torques.to_vec(), losses)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_map() -> LossMap {
        LossMap::new(
            vec![0.0, 100.0],
            vec![0.0, 10.0, 20.0],
            vec![vec![0.0, 10.0, 40.0], vec![100.0, 120.0, 200.0]],
        )
        .unwrap()
    }

    #[test]
    fn node_and_midpoint_queries() {
        let m = small_map();
        assert_eq!(m.interpolate(100.0, 10.0).unwrap(), 120.0);
        assert_eq!(m.interpolate(0.0, 20.0).unwrap(), 40.0);
        assert_eq!(m.interpolate(0.0, 15.0).unwrap(), 25.0);
        assert_eq!(m.interpolate(50.0, 0.0).unwrap(), 50.0);
        assert_eq!(m.interpolate(50.0, -15.0).unwrap(), m.interpolate(50.0, 15.0).unwrap());
    }

    #[test]
    fn torque_range_enforced() {
        let m = small_map();
        assert!(m.interpolate(0.0, 20.1).is_ok());
        assert!(matches!(m.interpolate(0.0, 20.3), Err(Error::OutOfRange(_))));
        // speed clamps
        assert_eq!(m.interpolate(500.0, 10.0).unwrap(), 120.0);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(LossMap::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![vec![0.0; 2]; 2]).is_err());
        assert!(LossMap::new(vec![0.0], vec![0.0, 1.0], vec![vec![-1.0, 0.0]]).is_err());
        assert!(LossMap::new(vec![0.0], vec![0.0, 1.0], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn csv_round_trip_both_forms() {
        let m = small_map();
        let wide = m.to_csv_string();
        assert_eq!(LossMap::from_csv_str(&wide, "w").unwrap(), m);
        let mut long = String::from("omega_radps,torque_nm,loss_w\n");
        for (w, row) in m.speeds().iter().zip(m.losses()) {
            for (t, p) in m.torques().iter().zip(row).rev() {
                long.push_str(&format!("{w},{t},{p}\n"));
            }
        }
        assert_eq!(LossMap::from_csv_str(&long, "l").unwrap(), m);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "omega_radps,0,10\n0,1,2\n10,3,abc\n";
        match LossMap::from_csv_str(text, "bad.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pmsm_like_values() {
        let zero = SyntheticKind::PmsmLike {
            c0: 0.0,
            c_copper: 0.0,
            c_iron: 0.0,
            c_windage: 0.0,
        };
        let m = generate_synthetic_map(&zero, &[0.0, 50.0], &[0.0, 100.0]).unwrap();
        assert!(m.losses().iter().flatten().all(|v| *v == 0.0));
        let k = SyntheticKind::PmsmLike {
            c0: 100.0,
            c_copper: 0.05,
            c_iron: 0.0,
            c_windage: 0.0,
        };
        let m = generate_synthetic_map(&k, &[0.0, 50.0, 300.0], &[0.0, 100.0]).unwrap();
        for row in m.losses() {
            assert!((row[1] - 600.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_inflection_requires_monotone_coefficients() {
        let bad = SyntheticKind::CubicInflection {
            c0: 1.0,
            c_iron: 0.0,
            c_windage: 0.0,
            a1: 0.01,
            a1_speed: 0.0,
            a2: 1.0,
            a3: 0.001,
        };
        assert!(generate_synthetic_map(&bad, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn grid_helper_includes_end() {
        let g = uniform_grid(0.0, 1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
    }
}
