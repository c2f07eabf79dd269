use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::propagation::target_working_point;
use crate::analysis::{
    allowed_interval, error_bar_curve, monte_carlo_m_uc, propagate_m_uc, systematic_contour,
    DvOverV, ErrorSources, NoiseReference,
};
use crate::calibration::{sweep_calibrate, CalibrationSet, Tone};
use crate::compensation::srr_sweep;
use crate::error::{Error, Result};
use crate::receiver::{DriftEvent, ReceiverInstance, Sideband};
use crate::scenario::config::{ExperimentKind, ScenarioConfig};
use crate::scenario::stability::{run_drift, DriftBound, DriftMode, DriftRunSettings};

pub const STABILITY_REPETITIONS: u32 = 48;
pub const DEFLUXING_RESETS: u32 = 9;
const CONTOUR_GRID_DB: [f64; 6] = [3.0, 7.0, 10.0, 15.0, 20.0, 30.0];
const ERROR_BAR_GRID_DB: [f64; 9] = [3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0];

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub plot_data: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: BTreeMap<String, f64>,
}

/// Everything checked before any file is touched.
struct Prepared {
    kind: ExperimentKind,
    seed: u64,
    out_dir: PathBuf,
    plot_data: bool,
    receiver: Option<ReceiverInstance>,
    calibration: Option<CalibrationSet>,
    cal_tone: Tone,
    readout_tone: Tone,
    repetitions: u32,
    bound: DriftBound,
    events: Vec<DriftEvent>,
    m_a_grid_db: Vec<f64>,
}

#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    summary: BTreeMap<String, f64>,
}

impl Outputs {
    fn add(&mut self, name: String, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name, buf));
        Ok(())
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn num(v: f64) -> String {
    format!("{v}").replace('-', "m").replace('.', "p")
}

fn receiver_label(m_a_db: Option<f64>) -> String {
    m_a_db.map_or_else(|| "no_hybrid".to_string(), |m| format!("ma{}db", num(m)))
}

fn prepare(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Prepared> {
    let kind = cfg.kind(opts.kind)?;
    let ex = &cfg.experiment;
    let seed = opts.seed.unwrap_or(ex.seed);
    let cal_tone = Tone::new(ex.tone_amplitude, ex.cal_averages);
    let readout_tone = Tone::new(ex.tone_amplitude, ex.readout_averages);
    cal_tone.validate().map_err(config_err)?;
    readout_tone.validate().map_err(config_err)?;
    let bound = DriftBound {
        gain_step_db: cfg.drift.gain_step_db,
        phase_step_deg: cfg.drift.phase_step_deg,
        target: cfg.drift.target,
    };
    bound.validate().map_err(config_err)?;
    for e in &cfg.drift.events {
        e.validate().map_err(config_err)?;
    }
    let default_reps = match kind {
        ExperimentKind::Defluxing => DEFLUXING_RESETS,
        _ => STABILITY_REPETITIONS,
    };
    let repetitions = ex.repetitions.unwrap_or(default_reps);
    if repetitions == 0 {
        return Err(Error::Config(
            "[experiment] repetitions must be >= 1".into(),
        ));
    }

    let (receiver, calibration) = if kind.needs_receiver() {
        let rc = cfg.receiver_config()?;
        let r = rc.build(ex.tone_amplitude).map_err(config_err)?;
        let cal = match &ex.calibration_csv {
            Some(p) => {
                let path = cfg.resolve(p);
                let file = std::fs::File::open(&path).map_err(|e| {
                    Error::Config(format!("calibration_csv {}: {e}", path.display()))
                })?;
                Some(CalibrationSet::read_csv(file, &r.plan).map_err(config_err)?)
            }
            None => None,
        };
        (Some(r), cal)
    } else {
        (None, None)
    };

    if !kind.needs_receiver() {
        if ex.targets_db.is_empty() || ex.targets_db.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config(
                "[experiment] targets_db must be non-empty and finite".into(),
            ));
        }
        if ex.sources.is_empty() {
            return Err(Error::Config(
                "[experiment] sources must not be empty".into(),
            ));
        }
        if !(ex.dv_over_v > 0.0 && ex.dv_over_v.is_finite()) {
            return Err(Error::Config(
                "[experiment] dv_over_v must be finite and > 0".into(),
            ));
        }
        if !ex.reference_m_a_db.is_finite() {
            return Err(Error::Config(
                "[experiment] reference_m_a_db must be finite".into(),
            ));
        }
        if ex.n_points < 2 {
            return Err(Error::Config("[experiment] n_points must be >= 2".into()));
        }
        if kind == ExperimentKind::MonteCarlo
            && ex.n_samples < crate::analysis::monte_carlo::MIN_SAMPLES
        {
            return Err(Error::Config(format!(
                "[experiment] n_samples must be >= {}",
                crate::analysis::monte_carlo::MIN_SAMPLES
            )));
        }
    }
    let m_a_grid_db = ex.m_a_grid_db.clone().unwrap_or_else(|| match kind {
        ExperimentKind::Contours => CONTOUR_GRID_DB.to_vec(),
        _ => ERROR_BAR_GRID_DB.to_vec(),
    });
    if m_a_grid_db.iter().any(|m| !m.is_finite()) {
        return Err(Error::Config(
            "[experiment] m_a_grid_db must be finite".into(),
        ));
    }
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.resolve(&cfg.output.dir));
    Ok(Prepared {
        kind,
        seed,
        out_dir,
        plot_data: opts.plot_data || cfg.output.plot_data,
        receiver,
        calibration,
        cal_tone,
        readout_tone,
        repetitions,
        bound,
        events: cfg.drift.events.clone(),
        m_a_grid_db,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn execute(p: &Prepared, cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let ex = &cfg.experiment;
    match p.kind {
        ExperimentKind::Calibrate | ExperimentKind::SrrSweep => {
            let r = p.receiver.as_ref().expect("validated");
            let cal = match &p.calibration {
                Some(c) => c.clone(),
                None => sweep_calibrate(r, &r.plan, p.cal_tone, p.seed)?,
            };
            out.add("calibration.csv".into(), |b| cal.write_csv(b))?;
            out.summary
                .insert("channels".into(), cal.channels.len() as f64);
            if p.kind == ExperimentKind::SrrSweep {
                let drift = p
                    .events
                    .iter()
                    .fold(DriftEvent::zero(), |acc, e| acc.accumulate(e));
                let drifted = r.apply_drift(&drift)?;
                let spectrum = srr_sweep(&drifted, &cal, &r.plan, p.readout_tone, p.seed)?;
                out.add("srr.csv".into(), |b| spectrum.write_csv(b))?;
                for sb in [Sideband::Usb, Sideband::Lsb] {
                    let raw = median(spectrum.sideband(sb).map(|e| e.raw.db()).collect());
                    let comp = median(spectrum.sideband(sb).map(|e| e.compensated.db()).collect());
                    out.summary
                        .insert(format!("{}_median_raw_srr_db", sb.label()), raw);
                    out.summary
                        .insert(format!("{}_median_comp_srr_db", sb.label()), comp);
                }
            }
        }
        ExperimentKind::Stability | ExperimentKind::Defluxing => {
            let r = p.receiver.as_ref().expect("validated");
            let mode = if p.kind == ExperimentKind::Stability {
                DriftMode::RandomWalk
            } else {
                DriftMode::Independent
            };
            let settings = DriftRunSettings {
                mode,
                repetitions: p.repetitions,
                bound: p.bound,
                cal_tone: p.cal_tone,
                readout_tone: p.readout_tone,
                seed: p.seed,
            };
            let table = run_drift(r, &settings, p.calibration.clone())?;
            let name = p.kind.label();
            out.add("calibration.csv".into(), |b| table.calibration.write_csv(b))?;
            out.add(format!("{name}.csv"), |b| table.write_csv(b))?;
            if p.plot_data {
                out.add(format!("{name}.dat"), |b| {
                    table.write_plot_data(b).expect("in-memory write");
                    Ok(())
                })?;
            }
            let initial = median(
                table
                    .rows
                    .iter()
                    .filter(|x| x.repetition == 0)
                    .map(|x| x.comp_srr_db)
                    .collect(),
            );
            out.summary
                .insert("initial_median_comp_srr_db".into(), initial);
            out.summary
                .insert("max_degradation_db".into(), table.max_degradation_db());
            out.summary.insert(
                "max_channel_degradation_db".into(),
                table.max_channel_degradation_db(),
            );
            out.summary
                .insert("min_comp_srr_db".into(), table.min_comp_srr_db());
            out.summary
                .insert("repetitions".into(), p.repetitions as f64);
        }
        ExperimentKind::Contours => {
            let mut intervals = csv::Writer::from_writer(Vec::new());
            for &t in &ex.targets_db {
                for m_a in std::iter::once(None).chain(p.m_a_grid_db.iter().copied().map(Some)) {
                    let c = systematic_contour(t, m_a, ex.n_points)?;
                    let stem = format!("contour_{}db_{}", num(t), receiver_label(m_a));
                    out.add(format!("{stem}.csv"), |b| c.write_csv(b))?;
                    if p.plot_data {
                        out.add(format!("{stem}.dat"), |b| {
                            c.write_plot_data(b).expect("in-memory write");
                            Ok(())
                        })?;
                    }
                    let (lo, hi) = allowed_interval(t, m_a)?;
                    intervals.serialize(IntervalRow {
                        target_db: t,
                        m_a_db: m_a,
                        x_lo: lo,
                        x_hi: hi,
                        width: hi - lo,
                    })?;
                }
            }
            let bytes = intervals
                .into_inner()
                .map_err(|e| Error::Csv(e.into_error().into()))?;
            out.files.push(("intervals.csv".into(), bytes));
        }
        ExperimentKind::ErrorBars => {
            let reference = NoiseReference {
                dv_over_v: ex.dv_over_v,
                m_a_db: ex.reference_m_a_db,
            };
            for &t in &ex.targets_db {
                for &s in &ex.sources {
                    let curve = error_bar_curve(t, &p.m_a_grid_db, reference, s, ex.branch)?;
                    let stem = format!("errorbars_{}db_{}", num(t), s.label());
                    out.add(format!("{stem}.csv"), |b| curve.write_csv(b))?;
                    if p.plot_data {
                        out.add(format!("{stem}.dat"), |b| {
                            curve.write_plot_data(b).expect("in-memory write");
                            Ok(())
                        })?;
                    }
                    if let Some(nh) = curve.no_hybrid() {
                        out.summary
                            .insert(format!("{stem}_no_hybrid_length_db"), nh.bar.length_db());
                    }
                }
            }
        }
        ExperimentKind::MonteCarlo => {
            let reference = NoiseReference {
                dv_over_v: ex.dv_over_v,
                m_a_db: ex.reference_m_a_db,
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut worst: f64 = 0.0;
            for &t in &ex.targets_db {
                for &s in &ex.sources {
                    for m_a in std::iter::once(None).chain(p.m_a_grid_db.iter().copied().map(Some))
                    {
                        let wp = match target_working_point(t, m_a, ex.branch) {
                            Ok(wp) => wp,
                            Err(Error::Unreachable { .. }) if m_a.is_some() => continue,
                            Err(e) => return Err(e),
                        };
                        let dv = DvOverV::new(reference.dv_over_v_for(m_a)?, s);
                        let an = propagate_m_uc(&wp, dv)?;
                        let mc = monte_carlo_m_uc(&wp, dv, ex.n_samples, p.seed)?;
                        let rel = mc.half_width_db() / an.half_width_db - 1.0;
                        if an.half_width_db >= 0.5 {
                            worst = worst.max(rel.abs());
                        }
                        w.serialize(McRow {
                            target_db: t,
                            m_a_db: m_a,
                            sources: s,
                            x: wp.x,
                            dv_over_v: dv.meas,
                            analytic_half_width_db: an.half_width_db,
                            mc_half_width_db: mc.half_width_db(),
                            mc_median_db: mc.median_db,
                            mc_mean_db: mc.mean_db,
                            rel_diff: rel,
                            n_samples: mc.n_samples,
                        })?;
                    }
                }
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::Csv(e.into_error().into()))?;
            out.files.push(("montecarlo.csv".into(), bytes));
            out.summary
                .insert("max_rel_diff_for_bars_at_least_0p5db".into(), worst);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct IntervalRow {
    target_db: f64,
    #[serde(rename = "M_A_db")]
    m_a_db: Option<f64>,
    x_lo: f64,
    x_hi: f64,
    width: f64,
}

#[derive(Serialize)]
struct McRow {
    target_db: f64,
    #[serde(rename = "M_A_db")]
    m_a_db: Option<f64>,
    sources: ErrorSources,
    x: f64,
    dv_over_v: f64,
    analytic_half_width_db: f64,
    mc_half_width_db: f64,
    mc_median_db: f64,
    mc_mean_db: f64,
    rel_diff: f64,
    n_samples: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: Artifact,
    run: RunSection<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<DriftManifest>,
    summary: &'a BTreeMap<String, f64>,
    config: ConfigEcho<'a>,
}

#[derive(Serialize)]
struct Artifact {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct RunSection<'a> {
    experiment: &'static str,
    seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    outputs: Vec<&'a str>,
}

#[derive(Serialize)]
struct DriftManifest {
    mode: DriftMode,
    gain_step_db: f64,
    phase_step_deg: f64,
    repetitions: u32,
    /// Band-mean compensated SRR below its post-calibration value.
    #[serde(skip_serializing_if = "Option::is_none")]
    max_degradation_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_channel_degradation_db: Option<f64>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    text: &'a str,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Validate, run and write every output plus `manifest.toml`.
///
/// Nothing is written when validation fails. A run that fails afterwards
/// still leaves a manifest that records the error.
pub fn run_experiment(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let p = prepare(cfg, opts)?;
    let mut out = Outputs::default();
    let result = execute(&p, cfg, &mut out);
    std::fs::create_dir_all(&p.out_dir).map_err(|e| io_err(&p.out_dir, e))?;
    let mut files = Vec::new();
    if result.is_ok() {
        for (name, bytes) in &out.files {
            let path = p.out_dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
            files.push(path);
        }
    }
    let drift = matches!(
        p.kind,
        ExperimentKind::Stability | ExperimentKind::Defluxing
    )
    .then(|| DriftManifest {
        mode: if p.kind == ExperimentKind::Stability {
            DriftMode::RandomWalk
        } else {
            DriftMode::Independent
        },
        gain_step_db: p.bound.gain_step_db,
        phase_step_deg: p.bound.phase_step_deg,
        repetitions: p.repetitions,
        max_degradation_db: out.summary.get("max_degradation_db").copied(),
        max_channel_degradation_db: out.summary.get("max_channel_degradation_db").copied(),
    });
    let manifest = Manifest {
        artifact: Artifact {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        run: RunSection {
            experiment: p.kind.label(),
            seed: p.seed,
            status: if result.is_ok() { "ok" } else { "failed" },
            error: result.as_ref().err().map(ToString::to_string),
            outputs: if result.is_ok() {
                out.files.iter().map(|(n, _)| n.as_str()).collect()
            } else {
                Vec::new()
            },
        },
        drift,
        summary: &out.summary,
        config: ConfigEcho {
            text: &cfg.source_text,
        },
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let manifest_path = p.out_dir.join("manifest.toml");
    std::fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    result?;
    Ok(RunReport {
        kind: p.kind,
        out_dir: p.out_dir,
        files,
        manifest: manifest_path,
        summary: out.summary,
    })
}
