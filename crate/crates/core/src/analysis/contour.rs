//! Pairs `(dphi, x)` that reach a given compensated rejection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::compensation::{no_hybrid_raw, with_hybrid_raw};
use crate::error::{Error, Result};
use crate::ratio::db_to_linear;

/// Bracketing range for `x`; beyond it a branch counts as unbounded.
const X_MIN: f64 = 1e-12;
const X_MAX: f64 = 1e12;
/// A peak this close to the target counts as a single tangent root.
const TANGENT_DB: f64 = 1e-9;
/// Default size of the `dphi` grid over [-90, 90] degrees.
pub const DEFAULT_CONTOUR_POINTS: usize = 721;

/// Compensated rejection in dB at `(x, dphi)` for either receiver.
pub fn m_uc_db(x: f64, dphi_deg: f64, m_a: Option<f64>) -> f64 {
    let dphi = dphi_deg.to_radians();
    match m_a {
        None => no_hybrid_raw(x, dphi).db(),
        Some(m) => with_hybrid_raw(x, dphi, m).db(),
    }
}

/// Which root of `M_Uc(x) = target` at fixed `dphi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
}

/// Roots at one `dphi`. `x_lo = 0` or `x_hi = inf` mark an unbounded side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourRow {
    pub dphi_deg: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl ContourRow {
    pub fn root(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Lower => self.x_lo,
            Branch::Upper => self.x_hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    pub target_m_uc_db: f64,
    pub m_a_db: Option<f64>,
    /// Only the `dphi` values at which the target is reachable.
    pub rows: Vec<ContourRow>,
}

impl ContourResult {
    /// Closed outline: lower roots by increasing `dphi`, then upper roots
    /// back. Unbounded roots are left out.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lower = self
            .rows
            .iter()
            .filter(|r| r.x_lo > 0.0)
            .map(|r| (r.dphi_deg, r.x_lo));
        let upper = self
            .rows
            .iter()
            .rev()
            .filter(|r| r.x_hi.is_finite())
            .map(|r| (r.dphi_deg, r.x_hi));
        lower.chain(upper).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Two-column blocks (`dphi_deg x`), lower branch then upper branch.
    pub fn write_plot_data<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# target {} dB, M_A {}",
            self.target_m_uc_db,
            fmt_m_a(self.m_a_db)
        )?;
        writeln!(w, "# lower branch")?;
        for r in self.rows.iter().filter(|r| r.x_lo > 0.0) {
            writeln!(w, "{} {}", r.dphi_deg, r.x_lo)?;
        }
        writeln!(w, "\n\n# upper branch")?;
        for r in self.rows.iter().filter(|r| r.x_hi.is_finite()) {
            writeln!(w, "{} {}", r.dphi_deg, r.x_hi)?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_m_a(m_a_db: Option<f64>) -> String {
    match m_a_db {
        Some(v) => format!("{v} dB"),
        None => "none (no IF hybrid)".to_string(),
    }
}

fn linear_m_a(m_a_db: Option<f64>) -> Result<Option<f64>> {
    match m_a_db {
        None => Ok(None),
        Some(db) if db.is_finite() => Ok(Some(db_to_linear(db))),
        Some(_) => Err(Error::invalid("m_a_db", "must be finite")),
    }
}

/// Largest `M_Uc` over `x` at fixed `dphi`, as `(x_peak, dB)`.
fn peak(dphi_deg: f64, m_a: Option<f64>) -> (f64, f64) {
    let f = |u: f64| m_uc_db(u.exp(), dphi_deg, m_a);
    if m_a.is_none() {
        // symmetric under x -> 1/x, maximum at x = 1
        return (1.0, f(0.0));
    }
    let (mut a, mut b) = (X_MIN.ln(), X_MAX.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // the optimum of a cusp such as dphi = 0 is exactly x = 1
    let candidates = [(c, fc), (d, fd), (0.0, f(0.0))];
    let (u, v) = candidates
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, (u, v)| {
            if v > acc.1 {
                (u, v)
            } else {
                acc
            }
        });
    (u.exp(), v)
}

/// Bisection in `log x` for `g(u) = M_Uc - target` with `g(lo) < 0 <= g(hi)`
/// or the reverse; runs until the bracket stops shrinking.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let g_lo_neg = g(lo) < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (g(mid) < 0.0) == g_lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi.exp() - lo.exp()).abs() < 1e-15 * hi.exp().max(1.0) {
            break;
        }
    }
    // return the side that reaches the target
    if g_lo_neg {
        hi
    } else {
        lo
    }
}

/// Roots at one `dphi`, or `None` when the target is out of reach there.
pub fn roots_at(target_db: f64, dphi_deg: f64, m_a: Option<f64>) -> Option<ContourRow> {
    let (x_peak, peak_db) = peak(dphi_deg, m_a);
    if peak_db < target_db {
        return None;
    }
    if peak_db - target_db <= TANGENT_DB {
        // the target only touches the peak
        return Some(ContourRow {
            dphi_deg,
            x_lo: x_peak,
            x_hi: x_peak,
        });
    }
    let g = |u: f64| m_uc_db(u.exp(), dphi_deg, m_a) - target_db;
    let u_peak = x_peak.ln();
    let x_lo = if g(X_MIN.ln()) >= 0.0 {
        0.0
    } else {
        bisect(X_MIN.ln(), u_peak, g).exp()
    };
    let x_hi = if g(X_MAX.ln()) >= 0.0 {
        f64::INFINITY
    } else {
        bisect(X_MAX.ln(), u_peak, g).exp()
    };
    Some(ContourRow {
        dphi_deg,
        x_lo,
        x_hi,
    })
}

/// Trace the contour `M_Uc = target` over a uniform `dphi` grid on
/// [-90, 90] degrees. `m_a_db = None` is the receiver without IF hybrid.
pub fn systematic_contour(
    target_m_uc_db: f64,
    m_a_db: Option<f64>,
    n_points: usize,
) -> Result<ContourResult> {
    if !target_m_uc_db.is_finite() {
        return Err(Error::invalid("target_m_uc_db", "must be finite"));
    }
    if n_points < 2 {
        return Err(Error::invalid("n_points", "need at least 2 grid points"));
    }
    let m_a = linear_m_a(m_a_db)?;
    if roots_at(target_m_uc_db, 0.0, m_a).is_none() {
        return Err(unreachable(target_m_uc_db, m_a_db));
    }
    let step = 180.0 / (n_points - 1) as f64;
    let rows = (0..n_points)
        .filter_map(|i| roots_at(target_m_uc_db, -90.0 + step * i as f64, m_a))
        .collect();
    Ok(ContourResult {
        target_m_uc_db,
        m_a_db,
        rows,
    })
}

fn unreachable(target_db: f64, m_a_db: Option<f64>) -> Error {
    Error::Unreachable {
        target_db,
        reason: format!("no x reaches it at dphi = 0 with M_A = {}", fmt_m_a(m_a_db)),
    }
}

/// Allowed `[x_lo, x_hi]` at `dphi = 0`.
pub fn allowed_interval(target_m_uc_db: f64, m_a_db: Option<f64>) -> Result<(f64, f64)> {
    let m_a = linear_m_a(m_a_db)?;
    let row =
        roots_at(target_m_uc_db, 0.0, m_a).ok_or_else(|| unreachable(target_m_uc_db, m_a_db))?;
    Ok((row.x_lo, row.x_hi))
}

/// The root of one branch at `dphi`; an unbounded branch is unreachable.
pub fn solve_x(
    target_m_uc_db: f64,
    m_a_db: Option<f64>,
    dphi_deg: f64,
    branch: Branch,
) -> Result<f64> {
    let m_a = linear_m_a(m_a_db)?;
    let row = roots_at(target_m_uc_db, dphi_deg, m_a)
        .ok_or_else(|| unreachable(target_m_uc_db, m_a_db))?;
    let x = row.root(branch);
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Unreachable {
            target_db: target_m_uc_db,
            reason: format!(
                "{branch:?} branch is unbounded with M_A = {}",
                fmt_m_a(m_a_db)
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_hybrid_30db_quadratic_roots() {
        let (lo, hi) = allowed_interval(30.0, None).unwrap();
        let s = 1000f64.sqrt();
        assert!((lo - (s - 1.0) / (s + 1.0)).abs() < 1e-10);
        assert!((hi - (s + 1.0) / (s - 1.0)).abs() < 1e-10);
        assert!((lo - 0.9387).abs() < 1e-4 && (hi - 1.0653).abs() < 1e-4);
    }

    #[test]
    fn hybrid_roots_match_closed_form() {
        for (t_db, m_db) in [(30.0, 10.0), (40.0, 20.0), (40.0, 3.0)] {
            let (t, m) = (db_to_linear(t_db), db_to_linear(m_db));
            let (lo, hi) = allowed_interval(t_db, Some(m_db)).unwrap();
            let lo_ref = 1.0 - (m - 1.0) / (m + (t * m).sqrt());
            let hi_ref = 1.0 + (m - 1.0) / ((t * m).sqrt() - m);
            assert!((lo - lo_ref).abs() < 1e-10, "{lo} {lo_ref}");
            assert!((hi - hi_ref).abs() < 1e-10, "{hi} {hi_ref}");
        }
    }

    #[test]
    fn hybrid_upper_branch_unbounded_once_m_a_reaches_target() {
        let (_, hi) = allowed_interval(30.0, Some(30.0)).unwrap();
        assert_eq!(hi, f64::INFINITY);
        assert!(solve_x(30.0, Some(30.0), 0.0, Branch::Upper).is_err());
        assert!(solve_x(30.0, Some(30.0), 0.0, Branch::Lower).is_ok());
    }

    #[test]
    fn degenerate_hybrid_is_unreachable() {
        let err = systematic_contour(30.0, Some(0.0), 11).unwrap_err();
        assert!(matches!(err, Error::Unreachable { .. }));
    }

    #[test]
    fn zero_db_target_touches_quadrature() {
        let c = systematic_contour(0.0, None, 721).unwrap();
        let at_90 = c.rows.iter().find(|r| r.dphi_deg == 90.0).unwrap();
        assert_eq!((at_90.x_lo, at_90.x_hi), (1.0, 1.0));
        assert!(m_uc_db(1.0, 90.0, None).abs() < 1e-12);
    }

    #[test]
    fn every_point_hits_target() {
        for (t, m) in [
            (30.0, None),
            (40.0, None),
            (30.0, Some(10.0)),
            (40.0, Some(25.0)),
            (40.0, Some(7.0)),
        ] {
            let c = systematic_contour(t, m, 181).unwrap();
            assert!(!c.points().is_empty());
            let m_lin = m.map(db_to_linear);
            for (dphi, x) in c.points() {
                let err = (m_uc_db(x, dphi, m_lin) - t).abs();
                assert!(
                    err < 1e-6,
                    "target {t} M_A {m:?}: ({dphi}, {x}) off by {err}"
                );
            }
        }
    }

    #[test]
    fn contour_is_symmetric_in_dphi() {
        let c = systematic_contour(30.0, Some(15.0), 41).unwrap();
        let n = c.rows.len();
        for i in 0..n / 2 {
            let (a, b) = (c.rows[i], c.rows[n - 1 - i]);
            assert_eq!(a.dphi_deg, -b.dphi_deg);
            assert!((a.x_lo - b.x_lo).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_header() {
        let c = systematic_contour(30.0, None, 5).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dphi_deg,x_lo,x_hi\n"));
    }
}
