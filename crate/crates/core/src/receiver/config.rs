use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_receiver, FrequencyPlan, GainMatrix, ImbalanceProfile, ReceiverInstance, Topology,
};
use crate::error::{Error, Result};

/// Receiver description as stored in a TOML file.
///
/// ```toml
/// [topology]
/// kind = "with_if_hybrid"
/// analog_rejection_db = 20.0
///
/// [profile]
/// ripple_amp_db = 0.5
///
/// [plan]
/// lo1_ghz = 662.0
/// lo2_ghz = 7.0
/// if_grid_mhz = [100.0, 225.0, 350.0]
///
/// [noise]
/// dv_over_v = 1e-3
/// rng_seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub topology: TopologySection,
    #[serde(default)]
    pub profile: ImbalanceProfile,
    pub plan: FrequencyPlan,
    #[serde(default)]
    pub noise: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: Topology,
    #[serde(default)]
    pub analog_rejection_db: Option<f64>,
}

/// Either an absolute `noise_sigma` or `dv_over_v`, the latter relative to
/// the nominal non-rejected port voltage for a unit tone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    #[serde(default)]
    pub dv_over_v: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ReceiverConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Nominal analog rejection in dB (zero for the no-hybrid topology).
    pub fn nominal_rejection_db(&self) -> Result<f64> {
        match (self.topology.kind, self.topology.analog_rejection_db) {
            (Topology::WithIfHybrid, Some(db)) => Ok(db),
            (Topology::WithIfHybrid, None) => Err(Error::Config(
                "[topology] analog_rejection_db is required with an IF hybrid".into(),
            )),
            (Topology::NoIfHybrid, _) => Ok(0.0),
        }
    }

    /// Absolute noise sigma implied by the `[noise]` section for tones of
    /// amplitude `tone_amplitude`.
    pub fn noise_sigma(&self, tone_amplitude: f64) -> Result<f64> {
        match (self.noise.noise_sigma, self.noise.dv_over_v) {
            (Some(_), Some(_)) => Err(Error::Config(
                "[noise] takes either noise_sigma or dv_over_v, not both".into(),
            )),
            (Some(s), None) => Ok(s),
            (None, Some(rel)) => {
                let v = match self.topology.kind {
                    Topology::NoIfHybrid => GainMatrix::nominal_no_hybrid().g1u.norm(),
                    Topology::WithIfHybrid => {
                        let m = 10f64.powf(self.nominal_rejection_db()? / 10.0);
                        GainMatrix::with_hybrid(m, 0.0).g1u.norm()
                    }
                };
                Ok(rel * v * tone_amplitude)
            }
            (None, None) => Ok(0.0),
        }
    }

    pub fn build(&self, tone_amplitude: f64) -> Result<ReceiverInstance> {
        build_receiver(
            self.topology.kind,
            &self.profile,
            self.nominal_rejection_db()?,
            &self.plan,
            self.noise_sigma(tone_amplitude)?,
            self.noise.rng_seed,
        )
    }
}
