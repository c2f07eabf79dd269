use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{Branch, ErrorSources};
use crate::error::{Error, Result};
use crate::receiver::{
    DriftEvent, DriftTarget, FrequencyPlan, ImbalanceProfile, NoiseSection, ReceiverConfig,
    TopologySection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Calibrate,
    SrrSweep,
    Stability,
    Defluxing,
    Contours,
    ErrorBars,
    MonteCarlo,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Calibrate => "calibrate",
            Self::SrrSweep => "srr_sweep",
            Self::Stability => "stability",
            Self::Defluxing => "defluxing",
            Self::Contours => "contours",
            Self::ErrorBars => "error_bars",
            Self::MonteCarlo => "monte_carlo",
        }
    }

    pub fn needs_receiver(self) -> bool {
        matches!(
            self,
            Self::Calibrate | Self::SrrSweep | Self::Stability | Self::Defluxing
        )
    }
}

/// Either `path` to a receiver file or the receiver sections inline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub path: Option<PathBuf>,
    pub topology: Option<TopologySection>,
    pub profile: Option<ImbalanceProfile>,
    pub plan: Option<FrequencyPlan>,
    pub noise: Option<NoiseSection>,
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_one() -> u32 {
    1
}
fn default_targets() -> Vec<f64> {
    vec![30.0, 40.0]
}
fn default_dv() -> f64 {
    crate::analysis::propagation::REFERENCE_DV_OVER_V
}
fn default_ref_m_a() -> f64 {
    crate::analysis::propagation::REFERENCE_M_A_DB
}
fn default_sources() -> Vec<ErrorSources> {
    vec![
        ErrorSources::CalibrationAndMeasurement,
        ErrorSources::MeasurementOnly,
    ]
}
fn default_n_points() -> usize {
    crate::analysis::contour::DEFAULT_CONTOUR_POINTS
}
fn default_n_samples() -> usize {
    100_000
}
fn default_branch() -> Branch {
    Branch::Upper
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub tone_amplitude: f64,
    #[serde(default = "default_one")]
    pub cal_averages: u32,
    #[serde(default = "default_one")]
    pub readout_averages: u32,
    /// Drifted readouts (stability) or resets (defluxing).
    pub repetitions: Option<u32>,
    /// Reuse an existing calibration instead of calibrating.
    pub calibration_csv: Option<PathBuf>,
    #[serde(default = "default_targets")]
    pub targets_db: Vec<f64>,
    /// Analog rejection values for the IF-hybrid receiver.
    pub m_a_grid_db: Option<Vec<f64>>,
    /// Relative voltage error at the reference receiver.
    #[serde(default = "default_dv")]
    pub dv_over_v: f64,
    #[serde(default = "default_ref_m_a")]
    pub reference_m_a_db: f64,
    #[serde(default = "default_sources")]
    pub sources: Vec<ErrorSources>,
    #[serde(default = "default_branch")]
    pub branch: Branch,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    #[serde(default)]
    pub gain_step_db: f64,
    #[serde(default)]
    pub phase_step_deg: f64,
    #[serde(default = "default_target")]
    pub target: DriftTarget,
    /// Fixed drifts applied after calibration in calibrate/sweep runs.
    #[serde(default)]
    pub events: Vec<DriftEvent>,
}

fn default_target() -> DriftTarget {
    DriftTarget::Both
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            gain_step_db: 0.0,
            phase_step_deg: 0.0,
            target: DriftTarget::Both,
            events: Vec::new(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub plot_data: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            plot_data: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub receiver: Option<ReceiverSection>,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub drift: DriftSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Text the config was parsed from, echoed into the manifest.
    #[serde(skip)]
    pub source_text: String,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        cfg.source_text = text.to_string();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The experiment kind, with `requested` (from the command line) taking
    /// part in the check.
    pub fn kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (self.experiment.kind, requested) {
            (Some(a), Some(b)) if a != b => Err(Error::Config(format!(
                "[experiment] kind = \"{}\" but the command asks for {}",
                a.label(),
                b.label()
            ))),
            (Some(k), _) | (None, Some(k)) => Ok(k),
            (None, None) => Err(Error::Config("[experiment] kind is missing".into())),
        }
    }

    /// The receiver description, read from disk if referenced.
    pub fn receiver_config(&self) -> Result<ReceiverConfig> {
        let sec = self
            .receiver
            .as_ref()
            .ok_or_else(|| Error::Config("missing [receiver] section".into()))?;
        let inline = sec.topology.is_some()
            || sec.plan.is_some()
            || sec.profile.is_some()
            || sec.noise.is_some();
        match (&sec.path, inline) {
            (Some(_), true) => Err(Error::Config(
                "[receiver] takes either path or inline sections, not both".into(),
            )),
            (Some(p), false) => {
                let path = self.resolve(p);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Config(format!("[receiver] path {}: {e}", path.display()))
                })?;
                ReceiverConfig::from_toml_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
            (None, _) => Ok(ReceiverConfig {
                topology: sec
                    .topology
                    .clone()
                    .ok_or_else(|| Error::Config("[receiver.topology] is missing".into()))?,
                profile: sec.profile.clone().unwrap_or_default(),
                plan: sec
                    .plan
                    .clone()
                    .ok_or_else(|| Error::Config("[receiver.plan] is missing".into()))?,
                noise: sec.noise.clone().unwrap_or_default(),
            }),
        }
    }
}
