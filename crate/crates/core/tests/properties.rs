use proptest::prelude::*;
use sideband::analysis::contour::m_uc_db;
use sideband::analysis::{allowed_interval, propagate_m_uc, systematic_contour, DvOverV};
use sideband::calibration::measure_x1;
use sideband::compensation::srr_from_tone;
use sideband::ratio::{db_to_linear, CAP_DB};
use sideband::receiver::DriftTarget;
use sideband::rng::rng_for;
use sideband::{
    m_uc_general, m_uc_no_hybrid, m_uc_with_hybrid, sweep_calibrate, ComplexValue, DriftEvent, FrequencyPlan,
    GainMatrix, ReceiverInstance, Sideband, Tone, Topology, WorkingPoint,
};

fn complex(mag: f64, deg: f64) -> ComplexValue {
    ComplexValue::from_polar(mag, deg.to_radians())
}

fn gains() -> impl Strategy<Value = GainMatrix> {
    let entry = || (0.05f64..2.0, -180.0f64..180.0).prop_map(|(m, p)| complex(m, p));
    (entry(), entry(), entry(), entry())
        .prop_filter("ports must separate", |(a, b, c, d)| (a * d - b * c).norm() > 1e-3)
        .prop_map(|(a, b, c, d)| GainMatrix::new(a, b, c, d).unwrap())
}

fn single(g: GainMatrix, sigma: f64) -> ReceiverInstance {
    let plan = FrequencyPlan::new(662.0, 7.0, vec![6000.0]).unwrap();
    ReceiverInstance::from_gains(Topology::WithIfHybrid, plan, vec![g], sigma, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outputs_are_linear(g in gains(), a in (-2.0f64..2.0, -2.0f64..2.0), b in (-2.0f64..2.0, -2.0f64..2.0)) {
        let r = single(g, 0.0);
        let (a, b) = (ComplexValue::new(a.0, a.1), ComplexValue::new(b.0, b.1));
        let (u1, u2) = r.analog_outputs(0, a, ComplexValue::new(0.0, 0.0)).unwrap();
        let (l1, l2) = r.analog_outputs(0, ComplexValue::new(0.0, 0.0), b).unwrap();
        let (s1, s2) = r.analog_outputs(0, a, b).unwrap();
        prop_assert!((s1 - u1 - l1).norm() < 1e-12);
        prop_assert!((s2 - u2 - l2).norm() < 1e-12);
    }

    #[test]
    fn drift_then_inverse_restores(g in gains(), dg in -1.0f64..1.0, dp in -10.0f64..10.0, port2 in any::<bool>()) {
        let r = single(g, 0.0);
        let d = if port2 { DriftEvent::port2(dg, dp) } else { DriftEvent::port1(dg, dp) };
        let back = r.apply_drift(&d).unwrap().apply_drift(&d.inverse()).unwrap();
        let (a, b) = (r.gains[0], back.gains[0]);
        for (x, y) in [(a.g1u, b.g1u), (a.g1l, b.g1l), (a.g2u, b.g2u), (a.g2l, b.g2l)] {
            prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }

    #[test]
    fn no_hybrid_form_symmetric_in_x(x in 0.01f64..100.0, dphi in -90.0f64..90.0) {
        let a = m_uc_no_hybrid(&WorkingPoint::no_hybrid(x, dphi)).unwrap();
        let b = m_uc_no_hybrid(&WorkingPoint::no_hybrid(1.0 / x, dphi)).unwrap();
        prop_assert!(a.is_above_cap() == b.is_above_cap());
        if !a.is_above_cap() {
            prop_assert!((a.linear() / b.linear() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejection_falls_with_phase_error(x in 0.2f64..5.0, p in 0.0f64..89.0, q in 0.0f64..89.0, m_a_db in prop::option::of(-5.0f64..40.0)) {
        let (small, large) = if p < q { (p, q) } else { (q, p) };
        prop_assume!(large - small > 1e-6);
        let m = m_a_db.map(db_to_linear);
        for sign in [-1.0, 1.0] {
            let a = m_uc_db(x, sign * small, m);
            let b = m_uc_db(x, sign * large, m);
            // without hybrid the phase error always hurts; with hybrid the
            // direction is set by the sign of M (1 - x)^2 - (1 - xM)^2
            let hurts = match m {
                None => true,
                Some(v) => v * (1.0 - x).powi(2) < (1.0 - x * v).powi(2),
            };
            if hurts {
                prop_assert!(a >= b - 1e-9);
            } else {
                prop_assert!(a <= b + 1e-9);
            }
        }
    }

    #[test]
    fn unity_analog_rejection_is_flat(x in 1e-3f64..1e3, dphi in -180.0f64..180.0) {
        let m = m_uc_with_hybrid(&WorkingPoint::with_hybrid(x, dphi, 1.0)).unwrap();
        prop_assert_eq!(m.linear(), 1.0);
    }

    /// Compensated SRR read through the recombined voltages equals the
    /// ratio expression fed with the same estimates.
    #[test]
    fn full_chain_matches_ratio_expression(g in gains(), dg in 0.01f64..1.0, dp in 0.1f64..5.0, sb_lsb in any::<bool>()) {
        let r = single(g, 0.0);
        let plan = r.plan.clone();
        let cal = sweep_calibrate(&r, &plan, Tone::unit(), 0).unwrap();
        let drifted = r.apply_drift(&DriftEvent::port1(dg, dp)).unwrap();
        let mut rng = rng_for(0, 0);
        let sb = if sb_lsb { Sideband::Lsb } else { Sideband::Usb };
        let reading = srr_from_tone(&drifted, &cal, 0, sb, Tone::unit(), &mut rng).unwrap();
        prop_assume!(!reading.compensated.is_above_cap());
        let c = &cal.channels[0];
        let via_ratio = match sb {
            Sideband::Usb => m_uc_general(c.x1, c.x2, reading.v1 / reading.v2).unwrap(),
            // the LSB mirror: swap port roles
            Sideband::Lsb => m_uc_general(c.x2, c.x1, reading.v2 / reading.v1).unwrap(),
        };
        prop_assert!((via_ratio.linear() / reading.compensated.linear() - 1.0).abs() < 1e-9,
            "{} vs {}", via_ratio.db(), reading.compensated.db());
    }

    #[test]
    fn exact_calibration_never_worse_than_raw(g in gains()) {
        let r = single(g, 0.0);
        let cal = sweep_calibrate(&r, &r.plan, Tone::unit(), 0).unwrap();
        let mut rng = rng_for(0, 0);
        for sb in [Sideband::Usb, Sideband::Lsb] {
            let reading = srr_from_tone(&r, &cal, 0, sb, Tone::unit(), &mut rng).unwrap();
            prop_assert!(reading.compensated.db() >= reading.raw.db() - 1e-9);
        }
    }

    #[test]
    fn contour_points_hit_target(target in 5.0f64..50.0, m_a_db in prop::option::of(1.0f64..35.0)) {
        let m = m_a_db.map(db_to_linear);
        match systematic_contour(target, m_a_db, 61) {
            Ok(c) => {
                for (dphi, x) in c.points() {
                    prop_assert!((m_uc_db(x, dphi, m) - target).abs() < 1e-6);
                }
            }
            Err(sideband::Error::Unreachable { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn intervals_widen_with_analog_rejection(target in 20.0f64..50.0, a in 1.0f64..40.0, b in 1.0f64..40.0) {
        let (lo_m, hi_m) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi_m - lo_m > 0.01);
        let (l1, h1) = allowed_interval(target, Some(lo_m)).unwrap();
        let (l2, h2) = allowed_interval(target, Some(hi_m)).unwrap();
        prop_assert!(l2 < l1);
        prop_assert!(h2 >= h1);
    }

    #[test]
    fn error_bars_scale_with_noise(target in 25.0f64..50.0, dv in 1e-5f64..1e-3) {
        let wp = WorkingPoint::no_hybrid(sideband::analysis::solve_x(target, None, 0.0, sideband::analysis::Branch::Upper).unwrap(), 0.0);
        let one = propagate_m_uc(&wp, DvOverV { cal: dv, meas: dv }).unwrap();
        let two = propagate_m_uc(&wp, DvOverV { cal: 2.0 * dv, meas: 2.0 * dv }).unwrap();
        prop_assert!((two.delta_m / one.delta_m - 2.0).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Averaging N observations shrinks the ratio scatter by about sqrt(N).
    #[test]
    fn averaging_shrinks_scatter(seed in any::<u64>()) {
        let r = single(GainMatrix::nominal_no_hybrid(), 1e-2);
        let truth = measure_x1(&r.with_noise_sigma(0.0), 0, Tone::unit(), &mut rng_for(0, 0)).unwrap();
        let spread = |n: u32| {
            let mut rng = rng_for(seed, n as u64);
            let trials = 400;
            let s: f64 = (0..trials)
                .map(|_| (measure_x1(&r, 0, Tone::new(1.0, n), &mut rng).unwrap() - truth).norm_sqr())
                .sum();
            (s / trials as f64).sqrt()
        };
        let ratio = spread(1) / spread(16);
        prop_assert!(ratio > 4.0 / 1.5 && ratio < 4.0 * 1.5, "ratio {ratio}");
    }

    #[test]
    fn zero_drift_noiseless_runs_stay_at_cap(seed in any::<u64>(), walk in any::<bool>()) {
        use sideband::scenario::{run_drift, DriftBound, DriftMode, DriftRunSettings};
        let plan = FrequencyPlan::uniform(662.0, 7.0, 4000.0, 8000.0, 3).unwrap();
        let r = sideband::build_receiver(Topology::WithIfHybrid, &sideband::ImbalanceProfile::zero(), 18.0, &plan, 0.0, 0).unwrap();
        let settings = DriftRunSettings {
            mode: if walk { DriftMode::RandomWalk } else { DriftMode::Independent },
            repetitions: 5,
            bound: DriftBound { gain_step_db: 0.0, phase_step_deg: 0.0, target: DriftTarget::Both },
            cal_tone: Tone::unit(),
            readout_tone: Tone::unit(),
            seed,
        };
        let t = run_drift(&r, &settings, None).unwrap();
        prop_assert!(t.rows.iter().all(|row| row.comp_srr_db == CAP_DB));
    }
}
