// A frozen calibration under slow drift and under defluxing resets, plus
// the worst single drift of 0.1 dB / 0.5 deg at 45 dB.

use sideband::analysis::worst_case_drift;
use sideband::receiver::{DriftTarget, LinearTerm};
use sideband::scenario::{run_defluxing, run_stability, DriftBound, DriftMode, DriftRunSettings};
use sideband::{build_receiver, FrequencyPlan, ImbalanceProfile, Result, Tone, Topology};

pub fn run_example() -> Result<(f64, f64)> {
    let plan = FrequencyPlan::uniform(662.0, 7.0, 4000.0, 8000.0, 8)?;
    let profile = ImbalanceProfile {
        phase_imbalance_deg: LinearTerm::constant(3.0),
        ripple_amp_db: 3.0,
        ripple_period_mhz: 4000.0,
        ..ImbalanceProfile::zero()
    };
    let sigma = 1.5e-3 * (316.2f64 / 317.2).sqrt();
    let r = build_receiver(Topology::WithIfHybrid, &profile, 25.0, &plan, sigma, 5)?;
    let settings = DriftRunSettings {
        mode: DriftMode::RandomWalk,
        repetitions: 48,
        bound: DriftBound {
            gain_step_db: 0.01,
            phase_step_deg: 0.05,
            target: DriftTarget::Both,
        },
        cal_tone: Tone::unit(),
        readout_tone: Tone::new(1.0, 256),
        seed: 5,
    };
    let walk = run_stability(&r, &settings)?;
    let resets = run_defluxing(&r, &DriftRunSettings { repetitions: 9, ..settings })?;
    for (name, t) in [("48 steps", &walk), ("9 resets", &resets)] {
        println!(
            "{name}: band-mean drop {:.2} dB, lowest channel {:.1} dB",
            t.max_degradation_db(),
            t.min_comp_srr_db()
        );
    }

    let w = worst_case_drift(45.0, None, 0.1, 0.5, 721)?;
    println!(
        "0.1 dB / 0.5 deg at 45 dB: worst drop {:.2} dB (x = {:.4}, dphi = {:.1} deg)",
        w.degradation_db(),
        w.x,
        w.dphi_deg
    );
    Ok((walk.max_degradation_db(), w.degradation_db()))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
