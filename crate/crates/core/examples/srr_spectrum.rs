// Raw and compensated sideband rejection across an 8-channel band of an
// IF-hybrid receiver, with a small drift after calibration.

use sideband::receiver::LinearTerm;
use sideband::{
    build_receiver, srr_sweep, sweep_calibrate, DriftEvent, FrequencyPlan, ImbalanceProfile, Result, Sideband,
    SrrSpectrum, Tone, Topology,
};

pub fn run_example() -> Result<SrrSpectrum> {
    let plan = FrequencyPlan::uniform(662.0, 7.0, 4000.0, 8000.0, 8)?;
    let profile = ImbalanceProfile {
        phase_imbalance_deg: LinearTerm::constant(3.0),
        ripple_amp_db: 4.0,
        ripple_period_mhz: 4000.0,
        ..ImbalanceProfile::zero()
    };
    // dv/v = 1e-3 on the non-rejected port
    let sigma = 1e-3 * (100.0f64 / 101.0).sqrt();
    let r = build_receiver(Topology::WithIfHybrid, &profile, 20.0, &plan, sigma, 4)?;
    let cal = sweep_calibrate(&r, &plan, Tone::unit(), 4)?;
    let drifted = r.apply_drift(&DriftEvent::port1(0.02, 0.1))?;
    let spectrum = srr_sweep(&drifted, &cal, &plan, Tone::unit(), 4)?;

    println!("  IF MHz   raw USB  comp USB   raw LSB  comp LSB");
    let usb: Vec<_> = spectrum.sideband(Sideband::Usb).collect();
    let lsb: Vec<_> = spectrum.sideband(Sideband::Lsb).collect();
    for (u, l) in usb.iter().zip(&lsb) {
        println!(
            "{:8.1} {:9.2} {:9.2} {:9.2} {:9.2}",
            u.if_freq_mhz,
            u.raw.db(),
            u.compensated.db(),
            l.raw.db(),
            l.compensated.db()
        );
    }
    Ok(spectrum)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
