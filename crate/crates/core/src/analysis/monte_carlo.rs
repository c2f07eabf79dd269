//! Sampling oracle for the propagated error bars.
//!
//! Each sample draws Gaussian noise on every voltage component of the
//! calibration tones and of the measurement tone, re-derives the ratios and
//! evaluates the general compensated-rejection expression.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::analysis::propagation::DvOverV;
use crate::compensation::{m_uc_general, WorkingPoint};
use crate::error::{Error, Result};
use crate::receiver::{ComplexValue, GainMatrix};
use crate::rng::{rng_for, SimRng};

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub n_samples: usize,
    pub mean_db: f64,
    pub median_db: f64,
    pub p16_db: f64,
    pub p84_db: f64,
    /// Samples that landed on the rejection cap.
    pub n_above_cap: usize,
}

impl McSummary {
    /// Half of the central 68% interval.
    pub fn half_width_db(&self) -> f64 {
        0.5 * (self.p84_db - self.p16_db)
    }

    pub fn length_db(&self) -> f64 {
        self.p84_db - self.p16_db
    }
}

/// Nominal gains of the receiver a working point refers to, for unit
/// coupled power.
pub fn working_point_gains(wp: &WorkingPoint) -> GainMatrix {
    match wp.m_a {
        None => GainMatrix::nominal_no_hybrid(),
        Some(m) => GainMatrix::with_hybrid(m, 0.0),
    }
}

fn noisy(v: ComplexValue, dv: f64, rng: &mut SimRng) -> ComplexValue {
    if dv == 0.0 {
        return v;
    }
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    v + ComplexValue::new(re * dv, im * dv)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Distribution of `M_Uc` in dB when the voltages behind `X1cal`, `X2cal`
/// and `X1m` carry noise of relative size `dv` (relative to the
/// non-rejected port voltage).
pub fn monte_carlo_m_uc(
    wp: &WorkingPoint,
    dv: DvOverV,
    n_samples: usize,
    rng_seed: u64,
) -> Result<McSummary> {
    wp.validate()?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "n_samples",
            format!("must be >= {MIN_SAMPLES}"),
        ));
    }
    for v in [dv.cal, dv.meas] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid("dv_over_v", "must be finite and >= 0"));
        }
    }
    let g = working_point_gains(wp);
    let v_ref = g.g1u.norm();
    let (dv_cal, dv_meas) = (dv.cal * v_ref, dv.meas * v_ref);
    let drift = ComplexValue::from_polar(wp.x, wp.dphi_deg.to_radians());
    let mut rng = rng_for(rng_seed, 0);
    let mut samples = Vec::with_capacity(n_samples);
    let mut n_above_cap = 0;
    for _ in 0..n_samples {
        let x1_cal = noisy(g.g1u, dv_cal, &mut rng) / noisy(g.g2u, dv_cal, &mut rng);
        let x2_cal = noisy(g.g2l, dv_cal, &mut rng) / noisy(g.g1l, dv_cal, &mut rng);
        let x1_m = noisy(g.g1u * drift, dv_meas, &mut rng) / noisy(g.g2u, dv_meas, &mut rng);
        let m = m_uc_general(x1_cal, x2_cal, x1_m)?;
        n_above_cap += m.is_above_cap() as usize;
        samples.push(m.db());
    }
    let mean_db = samples.iter().sum::<f64>() / n_samples as f64;
    samples.sort_by(f64::total_cmp);
    Ok(McSummary {
        n_samples,
        mean_db,
        median_db: percentile(&samples, 0.5),
        p16_db: percentile(&samples, 0.158_655_253_931_457_05),
        p84_db: percentile(&samples, 0.841_344_746_068_542_9),
        n_above_cap,
    })
}
