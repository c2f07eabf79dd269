macro_rules! example {
    ($m:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(receiver_model, "receiver_model.rs");
example!(calibration_sweep, "calibration_sweep.rs");
example!(srr_spectrum, "srr_spectrum.rs");
example!(closed_forms, "closed_forms.rs");
example!(systematic_contours, "systematic_contours.rs");
example!(error_bars, "error_bars.rs");
example!(monte_carlo, "monte_carlo.rs");
example!(stability, "stability.rs");
example!(scenario_from_config, "scenario_from_config.rs");

#[test]
fn receiver_model_runs() {
    let analog = receiver_model::run_example().unwrap();
    assert_eq!(analog.len(), 5);
    assert!(analog.iter().all(|m| (18.0..23.0).contains(m)));
}

#[test]
fn calibration_sweep_runs() {
    let cal = calibration_sweep::run_example().unwrap();
    assert_eq!(cal.channels.len(), 4);
}

#[test]
fn srr_spectrum_runs() {
    let s = srr_spectrum::run_example().unwrap();
    assert_eq!(s.entries.len(), 16);
    assert!(s.entries.iter().all(|e| e.compensated.db() > e.raw.db()));
}

#[test]
fn closed_forms_runs() {
    assert!(closed_forms::run_example().unwrap() < 1e-12);
}

#[test]
fn systematic_contours_runs() {
    assert_eq!(systematic_contours::run_example().unwrap().len(), 14);
}

#[test]
fn error_bars_runs() {
    let fitted = error_bars::run_example().unwrap();
    assert!((1e-4..1e-2).contains(&fitted));
}

#[test]
fn monte_carlo_runs() {
    for (a, m) in monte_carlo::run_example().unwrap() {
        assert!((m / a - 1.0).abs() < 0.1);
    }
}

#[test]
fn stability_runs() {
    let (walk, worst) = stability::run_example().unwrap();
    assert!(walk >= 0.0);
    assert!(worst > 5.0);
}

#[test]
fn scenario_from_config_runs() {
    assert_eq!(scenario_from_config::run_example().unwrap(), 2);
}
