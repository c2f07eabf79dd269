//! Drift runs against a frozen calibration.
//!
//! Stability runs accumulate a random walk of per-port gain and phase steps;
//! defluxing runs draw an independent perturbation for every reset.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::calibration::{sweep_calibrate, CalibrationSet, Tone};
use crate::compensation::srr_from_tone;
use crate::error::{Error, Result};
use crate::ratio::Rejection;
use crate::receiver::{DriftEvent, DriftTarget, ReceiverInstance, Sideband};
use crate::rng::rng_for;

const READOUT_STREAM: u64 = 1 << 40;
const DRIFT_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// Cumulative steps (time drift).
    RandomWalk,
    /// One independent perturbation per reset (defluxing).
    Independent,
}

/// Bound on each port's gain and phase change per step, drawn uniformly
/// within `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftBound {
    pub gain_step_db: f64,
    pub phase_step_deg: f64,
    pub target: DriftTarget,
}

impl DriftBound {
    pub fn zero() -> Self {
        Self {
            gain_step_db: 0.0,
            phase_step_deg: 0.0,
            target: DriftTarget::Both,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gain_step_db", self.gain_step_db),
            ("phase_step_deg", self.phase_step_deg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> DriftEvent {
        let mut uniform = |b: f64| {
            if b > 0.0 {
                rng.random_range(-b..=b)
            } else {
                0.0
            }
        };
        let mut e = DriftEvent::zero();
        for i in 0..2 {
            e.dgain_db[i] = uniform(self.gain_step_db);
            e.dphase_deg[i] = uniform(self.phase_step_deg);
        }
        e.target = self.target;
        // keep only the ports the target touches
        DriftEvent::zero().accumulate(&e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRunSettings {
    pub mode: DriftMode,
    /// Number of drifted readouts after the initial one.
    pub repetitions: u32,
    pub bound: DriftBound,
    pub cal_tone: Tone,
    pub readout_tone: Tone,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRunRow {
    /// 0 is the readout right after calibration.
    pub repetition: u32,
    pub channel_index: usize,
    pub if_freq_mhz: f64,
    pub sideband: &'static str,
    pub raw_srr_db: f64,
    pub comp_srr_db: f64,
    pub above_cap: u8,
    pub degradation_db: f64,
    /// Accumulated drift on port 1 relative to port 2.
    pub rel_gain_db: f64,
    pub rel_phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRunTable {
    pub mode: DriftMode,
    pub bound: DriftBound,
    pub calibration: CalibrationSet,
    pub rows: Vec<DriftRunRow>,
}

impl DriftRunTable {
    /// Mean compensated SRR (dB) over channels, per repetition and sideband.
    pub fn band_means(&self) -> Vec<BandMean> {
        let reps = self.rows.iter().map(|r| r.repetition).max().unwrap_or(0);
        let mut out = Vec::new();
        for repetition in 0..=reps {
            for sb in [Sideband::Usb, Sideband::Lsb] {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.repetition == repetition && r.sideband == sb.label())
                    .map(|r| r.comp_srr_db)
                    .collect();
                if !v.is_empty() {
                    out.push(BandMean {
                        repetition,
                        sideband: sb,
                        comp_srr_db: v.iter().sum::<f64>() / v.len() as f64,
                    });
                }
            }
        }
        out
    }

    /// Largest drop of the band-mean SRR below its value right after
    /// calibration, over both sidebands.
    pub fn max_degradation_db(&self) -> f64 {
        let means = self.band_means();
        let initial = |sb: Sideband| {
            means
                .iter()
                .find(|m| m.repetition == 0 && m.sideband == sb)
                .map_or(0.0, |m| m.comp_srr_db)
        };
        means
            .iter()
            .map(|m| initial(m.sideband) - m.comp_srr_db)
            .fold(0.0, f64::max)
    }

    /// Largest single-channel drop. Channels whose calibration happened to
    /// land very close to the truth start high and can fall far.
    pub fn max_channel_degradation_db(&self) -> f64 {
        self.rows.iter().map(|r| r.degradation_db).fold(0.0, f64::max)
    }

    pub fn min_comp_srr_db(&self) -> f64 {
        self.rows.iter().map(|r| r.comp_srr_db).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Two columns per sideband block: repetition and band-mean SRR.
    pub fn write_plot_data<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let means = self.band_means();
        for (k, sb) in [Sideband::Usb, Sideband::Lsb].into_iter().enumerate() {
            if k > 0 {
                writeln!(w, "\n")?;
            }
            writeln!(w, "# {} repetition band_mean_comp_srr_db", sb.label())?;
            for m in means.iter().filter(|m| m.sideband == sb) {
                writeln!(w, "{} {}", m.repetition, m.comp_srr_db)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMean {
    pub repetition: u32,
    pub sideband: Sideband,
    pub comp_srr_db: f64,
}

/// Calibrate once (unless `calibration` is given), then read the
/// compensated SRR of every channel and sideband after each drift.
pub fn run_drift(
    receiver: &ReceiverInstance,
    settings: &DriftRunSettings,
    calibration: Option<CalibrationSet>,
) -> Result<DriftRunTable> {
    settings.bound.validate()?;
    settings.cal_tone.validate()?;
    settings.readout_tone.validate()?;
    if settings.repetitions == 0 {
        return Err(Error::invalid("repetitions", "must be >= 1"));
    }
    let plan = &receiver.plan;
    let cal = match calibration {
        Some(c) => c,
        None => sweep_calibrate(receiver, plan, settings.cal_tone, settings.seed)?,
    };
    let n_ch = plan.len() as u64;
    let mut drift_rng = rng_for(settings.seed, DRIFT_STREAM);
    let mut state = DriftEvent::zero();
    let mut initial: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    for rep in 0..=settings.repetitions {
        if rep > 0 {
            let step = settings.bound.draw(&mut drift_rng);
            state = match settings.mode {
                DriftMode::RandomWalk => state.accumulate(&step),
                DriftMode::Independent => step,
            };
        }
        let drifted = receiver.apply_drift(&state)?;
        for (ch, &f) in plan.if_grid_mhz.iter().enumerate() {
            let mut rng = rng_for(
                settings.seed,
                READOUT_STREAM + rep as u64 * n_ch + ch as u64,
            );
            for (k, sb) in [Sideband::Usb, Sideband::Lsb].into_iter().enumerate() {
                let reading =
                    srr_from_tone(&drifted, &cal, ch, sb, settings.readout_tone, &mut rng)?;
                let comp = reading.compensated;
                if rep == 0 {
                    initial.push(comp.db());
                }
                rows.push(row(
                    rep,
                    ch,
                    f,
                    sb,
                    reading.raw,
                    comp,
                    initial[2 * ch + k],
                    &state,
                ));
            }
        }
    }
    Ok(DriftRunTable {
        mode: settings.mode,
        bound: settings.bound,
        calibration: cal,
        rows,
    })
}

#[allow(clippy::too_many_arguments)]
fn row(
    repetition: u32,
    channel_index: usize,
    if_freq_mhz: f64,
    sb: Sideband,
    raw: Rejection,
    comp: Rejection,
    initial_db: f64,
    state: &DriftEvent,
) -> DriftRunRow {
    DriftRunRow {
        repetition,
        channel_index,
        if_freq_mhz,
        sideband: sb.label(),
        raw_srr_db: raw.db(),
        comp_srr_db: comp.db(),
        above_cap: comp.is_above_cap() as u8,
        degradation_db: (initial_db - comp.db()).max(0.0),
        rel_gain_db: state.dgain_db[0] - state.dgain_db[1],
        rel_phase_deg: state.dphase_deg[0] - state.dphase_deg[1],
    }
}
