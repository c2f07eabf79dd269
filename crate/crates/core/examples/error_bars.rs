// Error bars on the compensated rejection against analog rejection, and
// the relative voltage error that best matches 1.7 dB at 35 dB and 4.9 dB
// at 45 dB.

use sideband::analysis::{error_bar_curve, fit_reference_dv_over_v, Branch, ErrorSources, NoiseReference};
use sideband::Result;

pub fn run_example() -> Result<f64> {
    let sources = ErrorSources::CalibrationAndMeasurement;
    let grid = [3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0];
    for target in [30.0, 35.0, 40.0, 45.0] {
        let curve = error_bar_curve(target, &grid, NoiseReference::default(), sources, Branch::Upper)?;
        println!("target {target} dB:");
        for r in &curve.rows {
            let label = r.m_a_db.map_or("no hybrid".to_string(), |m| format!("{m} dB"));
            println!(
                "  {label:>10}  bar {:6.3} dB  (arms -{:.3} / +{:.3})",
                r.bar.length_db(),
                r.bar.lower_arm_db,
                r.bar.upper_arm_db
            );
        }
        if !curve.unreachable_m_a_db.is_empty() {
            println!("  no upper-branch root for M_A {:?} dB", curve.unreachable_m_a_db);
        }
    }
    let fitted = fit_reference_dv_over_v(&[(35.0, 1.7), (45.0, 4.9)], sources)?;
    println!("fitted dv/v at M_A = 20 dB: {fitted:.3e}");
    Ok(fitted)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
