// Build receivers with and without IF hybrid and look at their raw
// sideband rejection and port noise.

use sideband::receiver::LinearTerm;
use sideband::rng::rng_for;
use sideband::{build_receiver, ComplexValue, FrequencyPlan, ImbalanceProfile, Result, Topology};

pub fn run_example() -> Result<Vec<f64>> {
    let plan = FrequencyPlan::uniform(662.0, 7.0, 4000.0, 8000.0, 5)?;
    let profile = ImbalanceProfile {
        amp_imbalance_db: LinearTerm::constant(0.5),
        phase_imbalance_deg: LinearTerm::constant(3.0),
        ripple_amp_db: 2.0,
        ripple_period_mhz: 4000.0,
        ..ImbalanceProfile::zero()
    };

    let hybrid = build_receiver(Topology::WithIfHybrid, &profile, 20.0, &plan, 1e-3, 1)?;
    let mut analog = Vec::new();
    println!("IF hybrid, nominal 20 dB:");
    for ch in 0..hybrid.channels() {
        let m = hybrid.analog_rejection(ch)?;
        println!("  {:7.1} MHz  M_A = {:5.2} dB", plan.if_grid_mhz[ch], m.db());
        analog.push(m.db());
    }

    let digital = build_receiver(Topology::NoIfHybrid, &profile, 0.0, &plan, 1e-3, 1)?;
    let one = ComplexValue::new(1.0, 0.0);
    let zero = ComplexValue::new(0.0, 0.0);
    let (v1, v2) = digital.analog_outputs(2, one, zero)?;
    println!("no IF hybrid, USB tone at channel 2: |v1| = {:.4}, |v2| = {:.4}", v1.norm(), v2.norm());

    let mut rng = rng_for(1, 0);
    let (n1, _) = digital.observe(2, one, zero, &mut rng)?;
    println!("one noisy observation moves v1 by {:.2e}", (n1 - v1).norm());
    Ok(analog)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
