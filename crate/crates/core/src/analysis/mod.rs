//! Error analysis of the compensated rejection: systematic contours,
//! propagated error bars and a Monte Carlo cross-check.

pub mod contour;
pub mod drift;
pub mod monte_carlo;
pub mod propagation;

pub use contour::{
    allowed_interval, solve_x, systematic_contour, Branch, ContourResult, ContourRow,
};
pub use drift::{worst_case_drift, DriftWorstCase};
pub use monte_carlo::{monte_carlo_m_uc, McSummary};
pub use propagation::{
    coupled_voltage, delta_x_phi, error_bar_curve, fit_reference_dv_over_v, propagate_m_uc,
    DvOverV, ErrorBar, ErrorBarCurve, ErrorSources, NoiseReference,
};
