// Calibrate every channel with single-sideband tones and round-trip the
// constants through CSV.

use sideband::receiver::LinearTerm;
use sideband::{build_receiver, sweep_calibrate, CalibrationSet, FrequencyPlan, ImbalanceProfile, Result, Tone, Topology};

pub fn run_example() -> Result<CalibrationSet> {
    let plan = FrequencyPlan::uniform(662.0, 7.0, 4000.0, 8000.0, 4)?;
    let profile = ImbalanceProfile {
        phase_imbalance_deg: LinearTerm { offset: 2.0, slope_per_ghz: 0.5 },
        ..ImbalanceProfile::zero()
    };
    let r = build_receiver(Topology::NoIfHybrid, &profile, 0.0, &plan, 1e-4, 3)?;
    let cal = sweep_calibrate(&r, &plan, Tone::new(1.0, 16), 3)?;
    for ch in &cal.channels {
        println!(
            "{:7.1} MHz  |X1| = {:.4} arg {:7.2} deg   |X2| = {:.4} arg {:7.2} deg",
            ch.if_freq_mhz,
            ch.x1.norm(),
            ch.x1.arg().to_degrees(),
            ch.x2.norm(),
            ch.x2.arg().to_degrees()
        );
    }

    let mut csv = Vec::new();
    cal.write_csv(&mut csv)?;
    let back = CalibrationSet::read_csv(csv.as_slice(), &plan)?;
    println!("CSV round trip keeps {} channels", back.channels.len());
    Ok(back)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
