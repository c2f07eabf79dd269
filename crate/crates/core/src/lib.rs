//! Simulation of a sideband-separating receiver with digital compensation
//! of its image rejection.
//!
//! The crate is organised bottom-up:
//!
//! * [`receiver`]: gain matrices, imbalance profiles, drift and noise.
//! * [`calibration`]: tone injection, ratio measurement, constants.
//! * [`compensation`]: recombination and compensated rejection ratios.
//! * [`analysis`]: error bars, systematic contours, Monte Carlo.
//! * [`scenario`]: config-driven experiments and their output files.

pub mod analysis;
pub mod calibration;
pub mod compensation;
pub mod error;
pub mod ratio;
pub mod receiver;
pub mod rng;
pub mod scenario;

pub use calibration::{sweep_calibrate, CalibrationSet, ChannelCalibration, Tone};
pub use compensation::{
    compensate, m_uc_general, m_uc_no_hybrid, m_uc_with_hybrid, srr_from_tone, srr_sweep,
    SrrSpectrum, WorkingPoint,
};
pub use error::{Error, Result};
pub use ratio::Rejection;
pub use receiver::{
    build_receiver, ComplexValue, DriftEvent, FrequencyPlan, GainMatrix, ImbalanceProfile,
    ReceiverInstance, Sideband, Topology,
};
