mod common;

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storedlight::eit::ControlSchedule;
use storedlight::polariton::{collective_coupling, dark_bright_transform, group_velocity, mixing_angle, norm};

#[test]
fn rotation_preserves_norm_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let e: Vec<_> = (0..500).map(|_| c()).collect();
    let s: Vec<_> = (0..500).map(|_| c()).collect();
    let theta: Vec<f64> = (0..500)
        .map(|j| j as f64 / 499.0 * std::f64::consts::FRAC_PI_2)
        .collect();
    let (psi, phi) = dark_bright_transform(&e, &s, &theta).unwrap();
    let before = norm(&e, 0.1) + norm(&s, 0.1);
    let after = norm(&psi, 0.1) + norm(&phi, 0.1);
    assert!(((before - after) / before).abs() < 1e-12);
}

#[test]
fn slow_switch_maps_dark_polariton_into_spin_wave() {
    let (dark, spin) = adiabatic_storage();
    assert!(spin / dark >= 0.99, "{spin} / {dark}");
}

#[test]
fn stored_spin_wave_norm_is_constant() {
    let (integrated, skipped) = stored_norm_drift();
    assert!(integrated < 1e-6, "{integrated} per ms");
    assert!(skipped < 1e-6, "{skipped} per ms");
}

#[test]
fn advection_round_trip_is_accurate() {
    for d in [0.3, 0.5, -0.7] {
        let err = advection_round_trip(d);
        assert!(err <= 1e-3, "d = {d} mm: {err}");
    }
}

/// Transit delay c·cos²θ over the equivalent uniform length of the cloud
/// against the simulated peak delay.
#[test]
fn group_velocity_matches_simulated_delay() {
    let cfg = deep_config(5.0);
    let probe = pulse(&cfg, 8.0, 2.0);
    let out = storedlight::eit::simulate(&cfg, None, &ControlSchedule::constant(cfg.control.rabi), &probe).unwrap();
    let (t_peak, _) = out.peak().unwrap();
    let measured = t_peak - 8.0;

    let gamma = cfg.species.gamma * 1e-6;
    let omega_c = cfg.control.rabi * 1e-6;
    let length = std::f64::consts::PI.sqrt() * cfg.cloud.width_1e; // m
    let g = collective_coupling(5.0 / (length * 1e3), gamma);
    let v_g = group_velocity(mixing_angle(g, omega_c).unwrap());
    let predicted = (length / v_g - length / storedlight::constants::PHYS.c) * 1e6;
    assert!(
        ((measured - predicted) / predicted).abs() < 0.1,
        "{measured} vs {predicted} µs"
    );
}

#[test]
fn stored_snapshot_is_a_dark_polariton() {
    let cfg = calibrated_config();
    let r = storedlight::protocols::run_store_retrieve(&cfg, 5e-6).unwrap();
    let snap = r.series.snapshots.iter().find(|s| s.name == "stored").unwrap();
    assert_eq!(snap.omega_c, 0.0);
    let view = storedlight::polariton::PolaritonView::from_snapshot(snap).unwrap();
    // control off: θ = π/2 everywhere, so Ψ = −Ŝ and Φ = Ê
    assert!(view.theta.iter().all(|&t| t == std::f64::consts::FRAC_PI_2));
    assert!(((view.dark_norm() - view.spin_norm()) / view.spin_norm()).abs() < 1e-12);
    assert!(view.to_csv().starts_with("z_mm,theta_rad"));
}
