//! Capped power ratios.
//!
//! Rejection ratios can be infinite (exact cancellation). They are kept
//! numeric by clamping to [`CAP_DB`] and raising an `above_cap` flag.

/// Largest reportable ratio in dB.
pub const CAP_DB: f64 = 200.0;
/// [`CAP_DB`] as a linear power ratio.
pub const CAP_LINEAR: f64 = 1e20;

/// A linear power ratio clamped to `[1/CAP_LINEAR, CAP_LINEAR]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    linear: f64,
    above_cap: bool,
}

impl Rejection {
    pub fn capped() -> Self {
        Self {
            linear: CAP_LINEAR,
            above_cap: true,
        }
    }

    /// `signal / image`, with `image == 0` mapped to the cap.
    pub fn from_powers(signal: f64, image: f64) -> Self {
        if image <= 0.0 {
            return if signal > 0.0 {
                Self::capped()
            } else {
                // 0/0: nothing measurable on either port
                Self::from_linear(1.0)
            };
        }
        Self::from_linear(signal / image)
    }

    pub fn from_linear(value: f64) -> Self {
        if value.is_nan() || value >= CAP_LINEAR {
            Self::capped()
        } else {
            Self {
                linear: value.max(1.0 / CAP_LINEAR),
                above_cap: false,
            }
        }
    }

    pub fn from_db(db: f64) -> Self {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.linear
    }

    pub fn db(self) -> f64 {
        if self.above_cap {
            CAP_DB
        } else {
            10.0 * self.linear.log10()
        }
    }

    pub fn is_above_cap(self) -> bool {
        self.above_cap
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
