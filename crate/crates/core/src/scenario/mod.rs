//! Config-driven experiments and their output files.

pub mod config;
pub mod run;
pub mod stability;

pub use config::{ExperimentKind, ScenarioConfig};
pub use run::{run_experiment, RunOptions, RunReport};
pub use stability::{run_drift, BandMean, DriftBound, DriftMode, DriftRunSettings, DriftRunTable};

/// Random-walk drift run (time stability).
pub fn run_stability(
    receiver: &crate::ReceiverInstance,
    settings: &DriftRunSettings,
) -> crate::Result<DriftRunTable> {
    let s = DriftRunSettings {
        mode: DriftMode::RandomWalk,
        ..settings.clone()
    };
    run_drift(receiver, &s, None)
}

/// Independent draws per reset (defluxing).
pub fn run_defluxing(
    receiver: &crate::ReceiverInstance,
    settings: &DriftRunSettings,
) -> crate::Result<DriftRunTable> {
    let s = DriftRunSettings {
        mode: DriftMode::Independent,
        ..settings.clone()
    };
    run_drift(receiver, &s, None)
}
