//! Digital recombination and compensated rejection ratios.
//!
//! With `c1 = c4 = 1` the compensated outputs are
//!
//! ```text
//! v1c = v1 + c2 v2
//! v2c = c3 v1 + v2
//! ```
//!
//! and the compensated USB rejection can be written purely in terms of the
//! calibration ratios and the ratio `X1m = v1/v2` seen at measurement time.
//! Only USB formulas exist; LSB numbers come from injecting in the LSB and
//! reading the ports the other way round.

use std::io::Write;

use serde::Serialize;

use crate::calibration::{CalibrationSet, Tone};
use crate::error::{Error, Result};
use crate::ratio::Rejection;
use crate::receiver::{ComplexValue, FrequencyPlan, ReceiverInstance, Sideband};
use crate::rng::{rng_for, SimRng};

/// Relative threshold below which the general-form denominator counts as zero.
pub const GENERAL_FORM_ZERO: f64 = 1e-15;

/// `v1c = c1 v1 + c2 v2`, `v2c = c3 v1 + c4 v2` with the channel's constants.
pub fn compensate(
    v1: ComplexValue,
    v2: ComplexValue,
    cal: &CalibrationSet,
    channel: usize,
) -> Result<(ComplexValue, ComplexValue)> {
    let [c1, c2, c3, c4] = cal.channel(channel)?.c;
    Ok((c1 * v1 + c2 * v2, c3 * v1 + c4 * v2))
}

/// Rejection ratios read from a single injected tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrrReading {
    pub raw: Rejection,
    pub compensated: Rejection,
    /// Averaged port voltages before compensation.
    pub v1: ComplexValue,
    pub v2: ComplexValue,
}

/// Inject a tone in `sideband`, average `tone.averages` observations and
/// read the rejection before and after compensation.
pub fn srr_from_tone(
    r: &ReceiverInstance,
    cal: &CalibrationSet,
    channel: usize,
    sideband: Sideband,
    tone: Tone,
    rng: &mut SimRng,
) -> Result<SrrReading> {
    tone.validate()?;
    let a = ComplexValue::new(tone.amplitude, 0.0);
    let zero = ComplexValue::new(0.0, 0.0);
    let (v_u, v_l) = match sideband {
        Sideband::Usb => (a, zero),
        Sideband::Lsb => (zero, a),
    };
    let (mut v1, mut v2) = (zero, zero);
    for _ in 0..tone.averages {
        let (o1, o2) = r.observe(channel, v_u, v_l, rng)?;
        v1 += o1;
        v2 += o2;
    }
    v1 /= tone.averages as f64;
    v2 /= tone.averages as f64;
    let (v1c, v2c) = compensate(v1, v2, cal, channel)?;
    let (raw, compensated) = match sideband {
        Sideband::Usb => (
            Rejection::from_powers(v1.norm_sqr(), v2.norm_sqr()),
            Rejection::from_powers(v1c.norm_sqr(), v2c.norm_sqr()),
        ),
        Sideband::Lsb => (
            Rejection::from_powers(v2.norm_sqr(), v1.norm_sqr()),
            Rejection::from_powers(v2c.norm_sqr(), v1c.norm_sqr()),
        ),
    };
    Ok(SrrReading {
        raw,
        compensated,
        v1,
        v2,
    })
}

/// Compensated USB rejection from the calibration ratios and the
/// measurement-time ratio `x1_m`:
///
/// `| X1cal (X2cal X1m - 1) / (X2cal (X1cal - X1m)) |^2`
pub fn m_uc_general(
    x1_cal: ComplexValue,
    x2_cal: ComplexValue,
    x1_m: ComplexValue,
) -> Result<Rejection> {
    if !(x2_cal.norm() > 0.0) {
        return Err(Error::ZeroRatio { index: 2 });
    }
    let num = x1_cal * (x2_cal * x1_m - 1.0);
    let den = x2_cal * (x1_cal - x1_m);
    let scale = x1_cal.norm() * (x2_cal.norm() * x1_m.norm() + 1.0);
    if den.norm() < GENERAL_FORM_ZERO * scale {
        return Ok(Rejection::capped());
    }
    Ok(Rejection::from_powers(num.norm_sqr(), den.norm_sqr()))
}

/// Deviation of the measurement-time ratio from the calibrated one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkingPoint {
    /// `X1m / X1cal` in magnitude.
    pub x: f64,
    /// `phi1m - phi1cal` in degrees.
    pub dphi_deg: f64,
    /// Linear analog rejection; `None` without IF hybrid.
    pub m_a: Option<f64>,
}

impl WorkingPoint {
    pub fn no_hybrid(x: f64, dphi_deg: f64) -> Self {
        Self {
            x,
            dphi_deg,
            m_a: None,
        }
    }

    pub fn with_hybrid(x: f64, dphi_deg: f64, m_a: f64) -> Self {
        Self {
            x,
            dphi_deg,
            m_a: Some(m_a),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::invalid("x", "must be finite and > 0"));
        }
        if !self.dphi_deg.is_finite() {
            return Err(Error::invalid("dphi_deg", "must be finite"));
        }
        if let Some(m) = self.m_a {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("m_a", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// `2x(1 - cos dphi)`, written without cancellation.
fn phase_term(x: f64, dphi_rad: f64) -> f64 {
    let s = (0.5 * dphi_rad).sin();
    4.0 * x * s * s
}

/// Closed form without IF hybrid:
/// `(1 + x^2 + 2x cos dphi) / (1 + x^2 - 2x cos dphi)`.
pub fn m_uc_no_hybrid(wp: &WorkingPoint) -> Result<Rejection> {
    wp.validate()?;
    if wp.m_a.is_some() {
        return Err(Error::invalid(
            "m_a",
            "must be absent for the no-hybrid form",
        ));
    }
    Ok(no_hybrid_raw(wp.x, wp.dphi_deg.to_radians()))
}

/// Closed form with IF hybrid:
/// `(1 + x^2 M^2 - 2x M cos dphi) / (M + x^2 M - 2x M cos dphi)`.
pub fn m_uc_with_hybrid(wp: &WorkingPoint) -> Result<Rejection> {
    wp.validate()?;
    let m = wp
        .m_a
        .ok_or_else(|| Error::invalid("m_a", "required for the IF-hybrid form"))?;
    Ok(with_hybrid_raw(wp.x, wp.dphi_deg.to_radians(), m))
}

/// Dispatch on the presence of `m_a`.
pub fn m_uc_closed_form(wp: &WorkingPoint) -> Result<Rejection> {
    match wp.m_a {
        None => m_uc_no_hybrid(wp),
        Some(_) => m_uc_with_hybrid(wp),
    }
}

pub(crate) fn no_hybrid_raw(x: f64, dphi_rad: f64) -> Rejection {
    let p = phase_term(x, dphi_rad);
    let num = (1.0 + x) * (1.0 + x) - p;
    let den = (1.0 - x) * (1.0 - x) + p;
    Rejection::from_powers(num, den)
}

pub(crate) fn with_hybrid_raw(x: f64, dphi_rad: f64, m: f64) -> Rejection {
    let p = phase_term(x, dphi_rad);
    let a = 1.0 - x * m;
    let num = a * a + m * p;
    let den = m * ((1.0 - x) * (1.0 - x) + p);
    Rejection::from_powers(num, den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrrEntry {
    pub channel_index: usize,
    pub if_freq_mhz: f64,
    pub sideband: Sideband,
    pub raw: Rejection,
    pub compensated: Rejection,
}

/// Raw and compensated rejection over a frequency plan, both sidebands.
#[derive(Debug, Clone, PartialEq)]
pub struct SrrSpectrum {
    pub plan: FrequencyPlan,
    pub entries: Vec<SrrEntry>,
}

#[derive(Serialize)]
struct SrrCsvRow<'a> {
    channel_index: usize,
    if_freq_mhz: f64,
    sideband: &'a str,
    raw_srr_db: f64,
    comp_srr_db: f64,
    above_cap: u8,
}

impl SrrSpectrum {
    pub fn sideband(&self, sb: Sideband) -> impl Iterator<Item = &SrrEntry> {
        self.entries.iter().filter(move |e| e.sideband == sb)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.entries {
            out.serialize(SrrCsvRow {
                channel_index: e.channel_index,
                if_freq_mhz: e.if_freq_mhz,
                sideband: e.sideband.label(),
                raw_srr_db: e.raw.db(),
                comp_srr_db: e.compensated.db(),
                above_cap: e.compensated.is_above_cap() as u8,
            })?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Streams used by [`srr_sweep`] start here, clear of the calibration streams.
pub const SWEEP_STREAM: u64 = 1 << 39;

/// [`srr_from_tone`] at every channel, USB then LSB, channel `k` on
/// stream `SWEEP_STREAM + k` of `rng_seed`.
pub fn srr_sweep(
    r: &ReceiverInstance,
    cal: &CalibrationSet,
    plan: &FrequencyPlan,
    tone: Tone,
    rng_seed: u64,
) -> Result<SrrSpectrum> {
    if cal.channels.len() < plan.len() || r.channels() < plan.len() {
        return Err(Error::invalid(
            "plan",
            "calibration or receiver does not cover the plan",
        ));
    }
    let mut entries = Vec::with_capacity(2 * plan.len());
    for (ch, &f) in plan.if_grid_mhz.iter().enumerate() {
        let mut rng = rng_for(rng_seed, SWEEP_STREAM + ch as u64);
        for sb in [Sideband::Usb, Sideband::Lsb] {
            let reading = srr_from_tone(r, cal, ch, sb, tone, &mut rng)?;
            entries.push(SrrEntry {
                channel_index: ch,
                if_freq_mhz: f,
                sideband: sb,
                raw: reading.raw,
                compensated: reading.compensated,
            });
        }
    }
    Ok(SrrSpectrum {
        plan: plan.clone(),
        entries,
    })
}
