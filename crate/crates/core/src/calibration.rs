//! Tone-injection calibration.
//!
//! A tone in one sideband only gives the complex port ratios
//!
//! ```text
//! X1 = v1 / v2   (V_L = 0)
//! X2 = v2 / v1   (V_U = 0)
//! ```
//!
//! from which the recombination constants follow as
//! `(c1, c2, c3, c4) = (1, -1/X2, -1/X1, 1)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::receiver::{ComplexValue, FrequencyPlan, ReceiverInstance};
use crate::rng::{rng_for, SimRng};

/// Default division floor relative to the tone amplitude.
pub const DIVISION_FLOOR_REL: f64 = 1e-12;

/// Injected test tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub amplitude: f64,
    /// Number of observations averaged per estimate.
    pub averages: u32,
    /// Smallest usable port magnitude, as a fraction of `amplitude`.
    pub floor_rel: f64,
}

impl Tone {
    pub fn new(amplitude: f64, averages: u32) -> Self {
        Self {
            amplitude,
            averages,
            floor_rel: DIVISION_FLOOR_REL,
        }
    }

    pub fn unit() -> Self {
        Self::new(1.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("tone_amplitude", "must be finite and > 0"));
        }
        if self.averages == 0 {
            return Err(Error::invalid("averages", "must be >= 1"));
        }
        if !(self.floor_rel >= 0.0) {
            return Err(Error::invalid("floor_rel", "must be >= 0"));
        }
        Ok(())
    }

    pub fn floor(&self) -> f64 {
        self.floor_rel * self.amplitude
    }
}

/// Calibration result of one IF channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCalibration {
    pub channel_index: usize,
    pub if_freq_mhz: f64,
    pub x1: ComplexValue,
    pub x2: ComplexValue,
    pub c: [ComplexValue; 4],
}

impl ChannelCalibration {
    pub fn from_ratios(
        channel_index: usize,
        if_freq_mhz: f64,
        x1: ComplexValue,
        x2: ComplexValue,
    ) -> Result<Self> {
        Ok(Self {
            channel_index,
            if_freq_mhz,
            x1,
            x2,
            c: derive_constants(x1, x2)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    pub channels: Vec<ChannelCalibration>,
    pub plan: FrequencyPlan,
    pub tone_amplitude: f64,
    pub averages: u32,
}

fn mean_ratio(
    r: &ReceiverInstance,
    channel: usize,
    tone: Tone,
    rng: &mut SimRng,
    usb: bool,
) -> Result<ComplexValue> {
    tone.validate()?;
    let a = ComplexValue::new(tone.amplitude, 0.0);
    let zero = ComplexValue::new(0.0, 0.0);
    let floor = tone.floor();
    let mut sum = zero;
    for _ in 0..tone.averages {
        let (num, den) = if usb {
            r.observe(channel, a, zero, rng)?
        } else {
            let (v1, v2) = r.observe(channel, zero, a, rng)?;
            (v2, v1)
        };
        let magnitude = den.norm();
        if !(magnitude >= floor) || magnitude == 0.0 {
            return Err(Error::DivisionFloor {
                channel,
                magnitude,
                floor,
            });
        }
        sum += num / den;
    }
    Ok(sum / tone.averages as f64)
}

/// `X1 = v1/v2` with a tone in the upper sideband, averaged over
/// `tone.averages` observations.
pub fn measure_x1(
    r: &ReceiverInstance,
    channel: usize,
    tone: Tone,
    rng: &mut SimRng,
) -> Result<ComplexValue> {
    mean_ratio(r, channel, tone, rng, true)
}

/// `X2 = v2/v1` with a tone in the lower sideband.
pub fn measure_x2(
    r: &ReceiverInstance,
    channel: usize,
    tone: Tone,
    rng: &mut SimRng,
) -> Result<ComplexValue> {
    mean_ratio(r, channel, tone, rng, false)
}

/// `(1, -1/X2, -1/X1, 1)`
pub fn derive_constants(x1: ComplexValue, x2: ComplexValue) -> Result<[ComplexValue; 4]> {
    if !(x1.norm() > 0.0) {
        return Err(Error::ZeroRatio { index: 1 });
    }
    if !(x2.norm() > 0.0) {
        return Err(Error::ZeroRatio { index: 2 });
    }
    let one = ComplexValue::new(1.0, 0.0);
    Ok([one, -x2.inv(), -x1.inv(), one])
}

/// Calibrate every channel of `plan`. Channel `k` draws from stream `k`
/// of `rng_seed`, so the result does not depend on evaluation order.
pub fn sweep_calibrate(
    r: &ReceiverInstance,
    plan: &FrequencyPlan,
    tone: Tone,
    rng_seed: u64,
) -> Result<CalibrationSet> {
    tone.validate()?;
    if plan.len() != r.channels() {
        return Err(Error::invalid(
            "plan",
            format!(
                "{} channels in plan, receiver has {}",
                plan.len(),
                r.channels()
            ),
        ));
    }
    let channels = plan
        .if_grid_mhz
        .iter()
        .enumerate()
        .map(|(ch, &f)| {
            let mut rng = rng_for(rng_seed, ch as u64);
            let x1 = measure_x1(r, ch, tone, &mut rng)?;
            let x2 = measure_x2(r, ch, tone, &mut rng)?;
            ChannelCalibration::from_ratios(ch, f, x1, x2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationSet {
        channels,
        plan: plan.clone(),
        tone_amplitude: tone.amplitude,
        averages: tone.averages,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    channel_index: usize,
    if_freq_mhz: f64,
    #[serde(rename = "X1_re")]
    x1_re: f64,
    #[serde(rename = "X1_im")]
    x1_im: f64,
    #[serde(rename = "X2_re")]
    x2_re: f64,
    #[serde(rename = "X2_im")]
    x2_im: f64,
    c2_re: f64,
    c2_im: f64,
    c3_re: f64,
    c3_im: f64,
}

impl CalibrationSet {
    pub fn channel(&self, channel: usize) -> Result<&ChannelCalibration> {
        self.channels.get(channel).ok_or(Error::ChannelOutOfRange {
            channel,
            len: self.channels.len(),
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for ch in &self.channels {
            out.serialize(CsvRow {
                channel_index: ch.channel_index,
                if_freq_mhz: ch.if_freq_mhz,
                x1_re: ch.x1.re,
                x1_im: ch.x1.im,
                x2_re: ch.x2.re,
                x2_im: ch.x2.im,
                c2_re: ch.c[1].re,
                c2_im: ch.c[1].im,
                c3_re: ch.c[2].re,
                c3_im: ch.c[2].im,
            })?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Read a calibration written by [`CalibrationSet::write_csv`]. The
    /// constants are re-derived from `X1`, `X2`.
    pub fn read_csv<R: Read>(r: R, plan: &FrequencyPlan) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut channels = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            channels.push(ChannelCalibration::from_ratios(
                row.channel_index,
                row.if_freq_mhz,
                ComplexValue::new(row.x1_re, row.x1_im),
                ComplexValue::new(row.x2_re, row.x2_im),
            )?);
        }
        if channels.len() != plan.len() {
            return Err(Error::Config(format!(
                "calibration has {} channels, plan has {}",
                channels.len(),
                plan.len()
            )));
        }
        Ok(Self {
            channels,
            plan: plan.clone(),
            tone_amplitude: f64::NAN,
            averages: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receiver::{build_receiver, GainMatrix, ImbalanceProfile, Topology};

    fn c(re: f64, im: f64) -> ComplexValue {
        ComplexValue::new(re, im)
    }

    fn plan1() -> FrequencyPlan {
        FrequencyPlan::new(662.0, 7.0, vec![500.0]).unwrap()
    }

    fn with_gains(g: GainMatrix, sigma: f64) -> ReceiverInstance {
        ReceiverInstance::from_gains(Topology::NoIfHybrid, plan1(), vec![g], sigma, 0).unwrap()
    }

    #[test]
    fn ideal_no_hybrid_ratios_are_j() {
        let r = with_gains(GainMatrix::nominal_no_hybrid(), 0.0);
        let mut rng = rng_for(0, 0);
        let x1 = measure_x1(&r, 0, Tone::unit(), &mut rng).unwrap();
        let x2 = measure_x2(&r, 0, Tone::unit(), &mut rng).unwrap();
        assert!((x1 - c(0.0, 1.0)).norm() < 1e-15, "{x1}");
        assert!((x2 - c(0.0, 1.0)).norm() < 1e-15, "{x2}");
    }

    #[test]
    fn ideal_hybrid_hits_division_floor() {
        let r = with_gains(GainMatrix::from_real(1.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        let mut rng = rng_for(0, 0);
        assert!(matches!(
            measure_x1(&r, 0, Tone::unit(), &mut rng),
            Err(Error::DivisionFloor { .. })
        ));
        assert!(matches!(
            measure_x2(&r, 0, Tone::unit(), &mut rng),
            Err(Error::DivisionFloor { .. })
        ));
    }

    #[test]
    fn noiseless_ratios_follow_gain_algebra() {
        use rand::Rng;
        let mut g_rng = rng_for(3, 0);
        for _ in 0..100 {
            let mut r = || c(g_rng.random_range(-1.0..1.0), g_rng.random_range(-1.0..1.0));
            let g = GainMatrix::new(r(), r(), r(), r()).unwrap();
            let rx = with_gains(g, 0.0);
            let mut rng = rng_for(0, 0);
            for amp in [1.0, 1e-3, 250.0] {
                let tone = Tone::new(amp, 1);
                let x1 = measure_x1(&rx, 0, tone, &mut rng).unwrap();
                let x2 = measure_x2(&rx, 0, tone, &mut rng).unwrap();
                let e1 = g.g1u / g.g2u;
                let e2 = g.g2l / g.g1l;
                assert!((x1 - e1).norm() <= 1e-13 * e1.norm());
                assert!((x2 - e2).norm() <= 1e-13 * e2.norm());
            }
        }
    }

    #[test]
    fn constants_from_ratios() {
        let [c1, c2, c3, c4] = derive_constants(c(0.0, 1.0), c(0.0, 1.0)).unwrap();
        assert_eq!(c1, c(1.0, 0.0));
        assert_eq!(c4, c(1.0, 0.0));
        assert!((c2 - c(0.0, 1.0)).norm() < 1e-16);
        assert!((c3 - c(0.0, 1.0)).norm() < 1e-16);

        let k = derive_constants(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(k, [c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);

        assert!(matches!(
            derive_constants(c(0.0, 0.0), c(1.0, 0.0)),
            Err(Error::ZeroRatio { index: 1 })
        ));
        assert!(matches!(
            derive_constants(c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::ZeroRatio { index: 2 })
        ));
    }

    #[test]
    fn averaged_estimate_is_within_noise_bound() {
        let sigma = 0.01;
        let r = with_gains(GainMatrix::nominal_no_hybrid(), sigma);
        let v2 = std::f64::consts::FRAC_1_SQRT_2;
        let truth = c(0.0, 1.0);
        let bound = 3.0 * (sigma / v2) / 8.0;
        let mut misses = 0;
        for trial in 0..100 {
            let mut rng = rng_for(11, trial);
            let x1 = measure_x1(&r, 0, Tone::new(1.0, 64), &mut rng).unwrap();
            if (x1.norm() - truth.norm()).abs() > bound {
                misses += 1;
            }
        }
        // the band is ~2.1 standard errors of |X1| wide
        assert!(misses <= 10, "{misses} of 100 outside the bound");
    }

    #[test]
    fn sweep_covers_plan_and_reports_channel() {
        let plan = FrequencyPlan::uniform(662.0, 7.0, 100.0, 900.0, 5).unwrap();
        let r = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            0.0,
            0,
        )
        .unwrap();
        let cal = sweep_calibrate(&r, &plan, Tone::unit(), 1).unwrap();
        assert_eq!(cal.channels.len(), 5);
        for ch in &cal.channels {
            assert!((ch.x1 - c(0.0, 1.0)).norm() < 1e-15);
            assert!((ch.x2 - c(0.0, 1.0)).norm() < 1e-15);
        }

        let mut broken = r.clone();
        broken.gains[3] = GainMatrix::from_real(1.0, 0.0, 0.0, 1.0).unwrap();
        match sweep_calibrate(&broken, &plan, Tone::unit(), 1) {
            Err(Error::DivisionFloor { channel, .. }) => assert_eq!(channel, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_layout_and_reload() {
        let plan = FrequencyPlan::uniform(662.0, 7.0, 100.0, 900.0, 3).unwrap();
        let profile = ImbalanceProfile {
            ripple_amp_db: 1.0,
            ..ImbalanceProfile::zero()
        };
        let r = build_receiver(Topology::WithIfHybrid, &profile, 15.0, &plan, 0.0, 0).unwrap();
        let cal = sweep_calibrate(&r, &plan, Tone::unit(), 1).unwrap();
        let mut buf = Vec::new();
        cal.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "channel_index,if_freq_mhz,X1_re,X1_im,X2_re,X2_im,c2_re,c2_im,c3_re,c3_im"
        );
        assert_eq!(text.lines().count(), 4);
        let back = CalibrationSet::read_csv(buf.as_slice(), &plan).unwrap();
        for (a, b) in back.channels.iter().zip(&cal.channels) {
            assert_eq!(a.x1, b.x1);
            assert_eq!(a.c, b.c);
        }
    }
}
