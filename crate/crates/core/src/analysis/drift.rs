//! Worst case of a single gain/phase drift on a compensated state.

use serde::Serialize;

use crate::analysis::contour::{m_uc_db, systematic_contour};
use crate::error::{Error, Result};
use crate::ratio::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftWorstCase {
    /// State before the drift.
    pub x: f64,
    pub dphi_deg: f64,
    /// Signed drift that does the most damage.
    pub dgain_db: f64,
    pub dphase_deg: f64,
    pub before_db: f64,
    pub after_db: f64,
}

impl DriftWorstCase {
    pub fn degradation_db(&self) -> f64 {
        self.before_db - self.after_db
    }
}

/// Search every state on the `target_db` contour and every sign of a drift
/// of `|dgain_db|` and `|dphase_deg|` on port 1 for the largest loss of
/// compensated rejection.
pub fn worst_case_drift(
    target_db: f64,
    m_a_db: Option<f64>,
    dgain_db: f64,
    dphase_deg: f64,
    n_points: usize,
) -> Result<DriftWorstCase> {
    if !(dgain_db.is_finite() && dphase_deg.is_finite()) {
        return Err(Error::invalid("drift", "must be finite"));
    }
    let contour = systematic_contour(target_db, m_a_db, n_points)?;
    let m_a = m_a_db.map(db_to_linear);
    let mut worst: Option<DriftWorstCase> = None;
    for (dphi, x) in contour.points() {
        let before_db = m_uc_db(x, dphi, m_a);
        for sg in [-1.0, 1.0] {
            for sp in [-1.0, 1.0] {
                let g = sg * dgain_db.abs();
                let p = sp * dphase_deg.abs();
                let after_db = m_uc_db(x * 10f64.powf(g / 20.0), dphi + p, m_a);
                let case = DriftWorstCase {
                    x,
                    dphi_deg: dphi,
                    dgain_db: g,
                    dphase_deg: p,
                    before_db,
                    after_db,
                };
                if worst.is_none_or(|w| case.degradation_db() > w.degradation_db()) {
                    worst = Some(case);
                }
            }
        }
    }
    worst.ok_or_else(|| Error::Unreachable {
        target_db,
        reason: "contour has no finite points".into(),
    })
}
