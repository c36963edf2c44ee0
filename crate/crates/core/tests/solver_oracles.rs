mod common;

use common::*;
use storedlight::eit::{simulate, ControlSchedule};
use storedlight::ExperimentConfig;

#[test]
fn beer_lambert_long_pulse() {
    let cfg = deep_config(5.0);
    let t = transmission(&cfg, 0.0, &pulse(&cfg, 40.0, 10.0));
    let expect = (-5.0f64).exp();
    assert!(((t - expect) / expect).abs() < 0.01, "T = {t}, expected {expect}");
}

#[test]
fn eit_transparency_for_narrow_pulse() {
    let cfg = deep_config(5.0);
    let t = transmission(&cfg, cfg.control.rabi, &pulse(&cfg, 8.0, 2.0));
    assert!(t >= 0.99, "T = {t}");
}

#[test]
fn matches_transfer_function_over_bandwidth_scan() {
    let cfg = deep_config(5.0);
    for fwhm in [0.2, 0.4, 0.8, 1.6] {
        let probe = pulse(&cfg, 1.5 + 4.0 * fwhm, fwhm);
        let err = transfer_function_error(&cfg, cfg.control.rabi, &probe);
        assert!(err <= 0.01, "FWHM {fwhm} µs: L2 error {err}");
    }
    // the two-level medium is a stricter test of the coupling normalisation
    let err = transfer_function_error(&cfg, 0.0, &pulse(&cfg, 3.0, 0.4));
    assert!(err <= 0.01, "Ω_c = 0: L2 error {err}");
}

#[test]
fn output_is_linear_in_probe_amplitude() {
    for alpha in [0.25, 3.7] {
        let err = linearity_error(alpha);
        assert!(err <= 1e-12, "α = {alpha}: {err}");
    }
}

#[test]
fn grid_halving_converges() {
    let (coarse, fine) = grid_halving();
    assert!(((coarse - fine) / fine).abs() < 0.005, "{coarse} vs {fine}");
}

#[test]
fn no_output_before_the_probe_arrives() {
    let cfg = ExperimentConfig::default();
    let probe = pulse(&cfg, 20.0, 0.4);
    let out = simulate(&cfg, None, &ControlSchedule::constant(cfg.control.rabi), &probe).unwrap();
    let onset = 20.0 - 3.0 * 0.4;
    let early = out
        .t
        .iter()
        .zip(&out.power)
        .filter(|(t, _)| **t < onset - 5.0)
        .map(|(_, p)| *p)
        .fold(0.0, f64::max);
    assert!(early < 1e-12, "{early}");
}

#[test]
fn empty_medium_is_the_identity() {
    let mut cfg = ExperimentConfig::default();
    cfg.medium.od_fiber = 0.0;
    let (out, _) = storage_series(&cfg);
    for (t, e) in out.t.iter().zip(&out.field) {
        let input = cfg.probe.envelope(t * 1e-6) * 1e-6;
        assert_eq!(e.re, input);
        assert_eq!(e.im, 0.0);
    }
}

#[test]
fn storage_sequence_shows_leakage_and_retrieval() {
    let cfg = ExperimentConfig::default();
    let (out, t_on) = storage_series(&cfg);
    let leak = storedlight::eit::output_pulse_energy(&out, 0.0, cfg.control.switch_off * 1e6 + 0.5).unwrap();
    let dark = storedlight::eit::output_pulse_energy(&out, t_on - 1.0, t_on).unwrap();
    let retrieved = storedlight::eit::output_pulse_energy(&out, t_on, t_on + 5.0).unwrap();
    assert!(leak > 0.1, "{leak}");
    assert!(retrieved > 0.01, "{retrieved}");
    assert!(dark < 1e-6 * retrieved, "{dark}");
}

#[test]
fn unresolved_grid_is_rejected() {
    let mut cfg = ExperimentConfig::default();
    cfg.numerics.points_per_width = 10.0;
    let err = simulate(&cfg, None, &ControlSchedule::constant(1.0), &cfg.probe).unwrap_err();
    assert!(matches!(err, storedlight::eit::SolverError::Resolution(_)));
}

#[test]
fn identical_runs_are_bit_identical() {
    let cfg = ExperimentConfig::default();
    let (a, _) = storage_series(&cfg);
    let (b, _) = storage_series(&cfg);
    assert_eq!(a.t, b.t);
    assert_eq!(a.field, b.field);
}
