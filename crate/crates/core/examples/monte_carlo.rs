// Sample noisy calibration and measurement voltages and compare the
// spread of the compensated rejection with the propagated error bar.

use sideband::analysis::propagation::target_working_point;
use sideband::analysis::{monte_carlo_m_uc, propagate_m_uc, Branch, DvOverV, ErrorSources, NoiseReference};
use sideband::Result;

pub fn run_example() -> Result<Vec<(f64, f64)>> {
    let reference = NoiseReference::default();
    let mut out = Vec::new();
    for target in [35.0, 45.0] {
        let wp = target_working_point(target, None, Branch::Upper)?;
        let dv = DvOverV::new(reference.dv_over_v_for(None)?, ErrorSources::CalibrationAndMeasurement);
        let analytic = propagate_m_uc(&wp, dv)?;
        let mc = monte_carlo_m_uc(&wp, dv, 20_000, 9)?;
        println!(
            "{target} dB: propagated half-width {:.3} dB, sampled {:.3} dB (median {:.2} dB)",
            analytic.half_width_db,
            mc.half_width_db(),
            mc.median_db
        );
        out.push((analytic.half_width_db, mc.half_width_db()));
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
