//! First-order propagation of voltage noise into the compensated rejection.
//!
//! A complex voltage ratio `X = v1/v2` measured with an error `dv` on the
//! real and imaginary parts of both voltages has
//!
//! ```text
//! dX   = (dv/v1) X sqrt(1 + X^2)
//! dphi = (dv/v1)   sqrt(1 + X^2)
//! ```
//!
//! `M_Uc` depends on the magnitude and phase of the ratio at calibration
//! and at measurement time; the four partial derivatives are taken by
//! central differences and summed in quadrature.

use std::io::Write;

use serde::Serialize;

use crate::analysis::contour::{solve_x, Branch};
use crate::compensation::{m_uc_closed_form, WorkingPoint};
use crate::error::{ensure_finite, Error, Result};
use crate::ratio::db_to_linear;
use crate::receiver::Topology;

/// `dv/v` quoted for the receiver with IF hybrid at `M_A = 20 dB`.
pub const REFERENCE_DV_OVER_V: f64 = 1e-3;
pub const REFERENCE_M_A_DB: f64 = 20.0;

/// Magnitude and phase errors of a measured ratio.
pub fn delta_x_phi(dv_over_v: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("X", "must be finite and > 0"));
    }
    if !(dv_over_v >= 0.0 && dv_over_v.is_finite()) {
        return Err(Error::invalid("dv_over_v", "must be finite and >= 0"));
    }
    let k = dv_over_v * (1.0 + x * x).sqrt();
    Ok((k * x, k))
}

/// Voltage at the non-rejected port when power `p` is coupled.
pub fn coupled_voltage(topology: Topology, p: f64, m_a: Option<f64>) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid("P", "must be finite and > 0"));
    }
    match topology {
        Topology::NoIfHybrid => Ok((p / 2.0).sqrt()),
        Topology::WithIfHybrid => {
            let m = m_a.ok_or_else(|| Error::invalid("M_A", "required with IF hybrid"))?;
            if !(m > 0.0) {
                return Err(Error::invalid("M_A", "must be > 0"));
            }
            if m.is_infinite() {
                return Ok(p.sqrt());
            }
            Ok(p.sqrt() * (m / (1.0 + m)).sqrt())
        }
    }
}

/// A relative voltage error quoted for one receiver, converted to other
/// receivers at the same absolute `dv` and the same coupled power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseReference {
    pub dv_over_v: f64,
    pub m_a_db: f64,
}

impl Default for NoiseReference {
    fn default() -> Self {
        Self {
            dv_over_v: REFERENCE_DV_OVER_V,
            m_a_db: REFERENCE_M_A_DB,
        }
    }
}

impl NoiseReference {
    pub fn new(dv_over_v: f64) -> Self {
        Self {
            dv_over_v,
            ..Self::default()
        }
    }

    /// `dv` for unit coupled power.
    pub fn absolute_dv(&self) -> f64 {
        let v = coupled_voltage(Topology::WithIfHybrid, 1.0, Some(db_to_linear(self.m_a_db)))
            .expect("reference receiver is valid");
        self.dv_over_v * v
    }

    /// `dv/v` for the receiver described by `m_a_db` (`None`: no IF hybrid).
    pub fn dv_over_v_for(&self, m_a_db: Option<f64>) -> Result<f64> {
        let v = match m_a_db {
            None => coupled_voltage(Topology::NoIfHybrid, 1.0, None)?,
            Some(db) => coupled_voltage(Topology::WithIfHybrid, 1.0, Some(db_to_linear(db)))?,
        };
        Ok(self.absolute_dv() / v)
    }
}

/// Which measured ratios carry noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSources {
    CalibrationAndMeasurement,
    MeasurementOnly,
}

impl ErrorSources {
    pub fn label(self) -> &'static str {
        match self {
            Self::CalibrationAndMeasurement => "cal_meas",
            Self::MeasurementOnly => "meas_only",
        }
    }
}

/// `dv/v` at calibration and at measurement time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DvOverV {
    pub cal: f64,
    pub meas: f64,
}

impl DvOverV {
    pub fn new(dv_over_v: f64, sources: ErrorSources) -> Self {
        let cal = match sources {
            ErrorSources::CalibrationAndMeasurement => dv_over_v,
            ErrorSources::MeasurementOnly => 0.0,
        };
        Self {
            cal,
            meas: dv_over_v,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dv_over_v (cal)", self.cal),
            ("dv_over_v (meas)", self.meas),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Error bar on `M_Uc` at one working point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBar {
    pub m_uc_db: f64,
    /// Linear standard error of `M_Uc`.
    pub delta_m: f64,
    /// First-order half-width, `10/ln10 * dM/M`.
    pub half_width_db: f64,
    /// `10 log10((M + dM)/M)`.
    pub upper_arm_db: f64,
    /// `10 log10(M/(M - dM))`; infinite once `dM >= M`.
    pub lower_arm_db: f64,
}

impl ErrorBar {
    /// Full length of the bar, `2 * half_width_db`.
    pub fn length_db(&self) -> f64 {
        2.0 * self.half_width_db
    }
}

/// Calibration ratio magnitude of the nominal receiver: 1 without IF
/// hybrid, `sqrt(M_A)` with it.
pub fn nominal_x_cal(m_a: Option<f64>) -> f64 {
    m_a.map_or(1.0, f64::sqrt)
}

fn step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

/// Propagate `dv/v` at calibration and measurement into `M_Uc`.
pub fn propagate_m_uc(wp: &WorkingPoint, dv: DvOverV) -> Result<ErrorBar> {
    wp.validate()?;
    dv.validate()?;
    let m0 = m_uc_closed_form(wp)?;
    if m0.is_above_cap() {
        return Err(Error::AtCap);
    }
    let x_cal = nominal_x_cal(wp.m_a);
    let x_m = wp.x * x_cal;
    let dphi = wp.dphi_deg.to_radians();
    // arguments: [X_cal, X_m, phi_cal, phi_m] with phi_cal = 0
    let args = [x_cal, x_m, 0.0, dphi];
    let m_at = |a: &[f64; 4]| -> Result<f64> {
        let p = WorkingPoint {
            x: a[1] / a[0],
            dphi_deg: (a[3] - a[2]).to_degrees(),
            m_a: wp.m_a,
        };
        let r = m_uc_closed_form(&p)?;
        if r.is_above_cap() {
            return Err(Error::AtCap);
        }
        Ok(r.linear())
    };
    let (dx_cal, dphi_cal) = delta_x_phi(dv.cal, x_cal)?;
    let (dx_m, dphi_m) = delta_x_phi(dv.meas, x_m)?;
    let sigmas = [dx_cal, dx_m, dphi_cal, dphi_m];
    let mut var = 0.0;
    for k in 0..4 {
        if sigmas[k] == 0.0 {
            continue;
        }
        let h = step(args[k]);
        let (mut up, mut down) = (args, args);
        up[k] += h;
        down[k] -= h;
        let d = (m_at(&up)? - m_at(&down)?) / (2.0 * h);
        var += (d * sigmas[k]).powi(2);
    }
    let m = m0.linear();
    let delta_m = var.sqrt();
    ensure_finite("delta_m", delta_m)?;
    let rel = delta_m / m;
    Ok(ErrorBar {
        m_uc_db: m0.db(),
        delta_m,
        half_width_db: 10.0 / std::f64::consts::LN_10 * rel,
        upper_arm_db: 10.0 * (1.0 + rel).log10(),
        lower_arm_db: if rel < 1.0 {
            -10.0 * (1.0 - rel).log10()
        } else {
            f64::INFINITY
        },
    })
}

/// Working point reaching `target_db` at `dphi = 0` on `branch`.
pub fn target_working_point(
    target_db: f64,
    m_a_db: Option<f64>,
    branch: Branch,
) -> Result<WorkingPoint> {
    let x = solve_x(target_db, m_a_db, 0.0, branch)?;
    Ok(WorkingPoint {
        x,
        dphi_deg: 0.0,
        m_a: m_a_db.map(db_to_linear),
    })
}

/// Error bar at `target_db` for one receiver, with the noise scaled from
/// `reference`.
pub fn error_bar_at_target(
    target_db: f64,
    m_a_db: Option<f64>,
    reference: NoiseReference,
    sources: ErrorSources,
    branch: Branch,
) -> Result<ErrorBar> {
    let wp = target_working_point(target_db, m_a_db, branch)?;
    let dv = reference.dv_over_v_for(m_a_db)?;
    propagate_m_uc(&wp, DvOverV::new(dv, sources))
}

/// One point of an error-bar-versus-`M_A` curve. `m_a_db = None` is the
/// receiver without IF hybrid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBarRow {
    pub m_a_db: Option<f64>,
    pub x: f64,
    pub dv_over_v: f64,
    pub bar: ErrorBar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBarCurve {
    pub target_db: f64,
    pub sources: ErrorSources,
    pub branch: Branch,
    pub rows: Vec<ErrorBarRow>,
    /// `M_A` values below the reach of compensation.
    pub unreachable_m_a_db: Vec<f64>,
}

#[derive(Serialize)]
struct ErrorBarCsvRow {
    #[serde(rename = "M_A_db")]
    m_a_db: f64,
    m_uc_db: f64,
    err_lo_db: f64,
    err_hi_db: f64,
    half_width_db: f64,
    receiver: &'static str,
}

impl ErrorBarCurve {
    pub fn no_hybrid(&self) -> Option<&ErrorBarRow> {
        self.rows.iter().find(|r| r.m_a_db.is_none())
    }

    /// The no-hybrid row is written at `M_A_db = 0`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(ErrorBarCsvRow {
                m_a_db: r.m_a_db.unwrap_or(0.0),
                m_uc_db: r.bar.m_uc_db,
                err_lo_db: r.bar.lower_arm_db,
                err_hi_db: r.bar.upper_arm_db,
                half_width_db: r.bar.half_width_db,
                receiver: if r.m_a_db.is_some() {
                    "with_hybrid"
                } else {
                    "no_hybrid"
                },
            })?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Two columns: `M_A_db` and full bar length in dB.
    pub fn write_plot_data<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# target {} dB, {}",
            self.target_db,
            self.sources.label()
        )?;
        for r in &self.rows {
            writeln!(w, "{} {}", r.m_a_db.unwrap_or(0.0), r.bar.length_db())?;
        }
        Ok(())
    }
}

/// Error bars at `target_db` for the receiver without IF hybrid followed by
/// the hybrid receiver at each `M_A` of the grid.
pub fn error_bar_curve(
    target_db: f64,
    m_a_grid_db: &[f64],
    reference: NoiseReference,
    sources: ErrorSources,
    branch: Branch,
) -> Result<ErrorBarCurve> {
    let mut rows = Vec::with_capacity(m_a_grid_db.len() + 1);
    let mut unreachable_m_a_db = Vec::new();
    for m_a_db in std::iter::once(None).chain(m_a_grid_db.iter().copied().map(Some)) {
        let wp = match target_working_point(target_db, m_a_db, branch) {
            Ok(wp) => wp,
            Err(Error::Unreachable { .. }) if m_a_db.is_some() => {
                unreachable_m_a_db.push(m_a_db.unwrap_or_default());
                continue;
            }
            Err(e) => return Err(e),
        };
        let dv = reference.dv_over_v_for(m_a_db)?;
        let bar = propagate_m_uc(&wp, DvOverV::new(dv, sources))?;
        rows.push(ErrorBarRow {
            m_a_db,
            x: wp.x,
            dv_over_v: dv,
            bar,
        });
    }
    Ok(ErrorBarCurve {
        target_db,
        sources,
        branch,
        rows,
        unreachable_m_a_db,
    })
}

/// Reference `dv/v` that best reproduces the given `(target_db, length_db)`
/// pairs for the receiver without IF hybrid, in the log least-squares sense.
pub fn fit_reference_dv_over_v(points: &[(f64, f64)], sources: ErrorSources) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("points", "need at least one point"));
    }
    let probe = NoiseReference::default();
    let mut sum = 0.0;
    for &(target_db, length_db) in points {
        if !(length_db > 0.0) {
            return Err(Error::invalid("length_db", "must be > 0"));
        }
        let bar = error_bar_at_target(target_db, None, probe, sources, Branch::Upper)?;
        // first-order bars scale linearly with dv/v
        sum += (length_db / bar.length_db()).ln();
    }
    Ok(probe.dv_over_v * (sum / points.len() as f64).exp())
}
