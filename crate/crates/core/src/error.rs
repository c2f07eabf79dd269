use std::path::PathBuf;

/// Errors raised by the receiver model, calibration and analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("channel {channel} out of range (plan has {len} channels)")]
    ChannelOutOfRange { channel: usize, len: usize },

    #[error("analog rejection is undefined for a receiver without IF hybrid")]
    NoAnalogRejection,

    #[error("channel {channel}: |v| = {magnitude:e} below division floor {floor:e}")]
    DivisionFloor {
        channel: usize,
        magnitude: f64,
        floor: f64,
    },

    #[error("zero calibration ratio X{index}")]
    ZeroRatio { index: u8 },

    #[error("target {target_db} dB unreachable: {reason}")]
    Unreachable { target_db: f64, reason: String },

    #[error("working point is at the rejection cap; derivative undefined")]
    AtCap,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::ChannelOutOfRange { .. } => {
                2
            }
            Error::Io { .. } | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
