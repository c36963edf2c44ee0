mod common;

use common::calibrated_config;
use storedlight::protocols::*;

#[test]
fn decay_is_applied_exactly() {
    let cfg = calibrated_config();
    let e0 = run_store_retrieve(&cfg, 0.0).unwrap().efficiency;
    for t in [5e-6, 1e-4, 4e-4, 1e-3] {
        let e = run_store_retrieve(&cfg, t).unwrap().efficiency;
        let expect = (-t / cfg.medium.tau_storage).exp();
        assert!((e / e0 - expect).abs() < 1e-6, "T = {t}: {} vs {expect}", e / e0);
    }
}

#[test]
fn zero_time_transport_is_store_retrieve_times_eps() {
    let cfg = calibrated_config();
    let still = run_store_retrieve(&cfg, 0.0).unwrap();
    let moved = run_transport_inside(&cfg, 0.0).unwrap();
    let expect = still.efficiency * cfg.medium.ramp_penalty_eps;
    assert!(
        ((moved.efficiency - expect) / expect).abs() < 1e-9,
        "{} vs {expect}",
        moved.efficiency
    );
}

#[test]
fn three_ms_transport_moves_1_44_mm() {
    let r = run_transport_inside(&calibrated_config(), 3e-3).unwrap();
    assert!((r.displacement - 1.438e-3).abs() < 1e-6, "{}", r.displacement);
    assert!((r.transport_time - 3e-3).abs() < 1e-15);
    assert_eq!(r.metadata["ramp_pairs"], 1.0);
}

#[test]
fn transport_converges_to_storage_as_speed_vanishes() {
    let mut cfg = calibrated_config();
    cfg.medium.ramp_penalty_eps = 1.0;
    cfg.protocol.transport_speed = 1e-6;
    let t = 2e-3;
    let moved = run_transport_inside(&cfg, t).unwrap().efficiency;
    let still = run_store_retrieve(&cfg, t).unwrap().efficiency;
    assert!(((moved - still) / still).abs() < 0.005, "{moved} vs {still}");
}

#[test]
fn comoving_at_rest_is_store_retrieve() {
    let cfg = calibrated_config();
    let a = run_comoving(&cfg, 0.0, 1e-3).unwrap();
    let b = run_store_retrieve(&cfg, 1e-3).unwrap();
    assert_eq!(a.efficiency, b.efficiency);
    assert_eq!(a.protocol, "comoving");
}

#[test]
fn comoving_records_the_doppler_shift() {
    let cfg = calibrated_config();
    let r = run_comoving(&cfg, 0.496, 1e-4).unwrap();
    let f = r.metadata["one_photon_doppler_hz"];
    assert!((f + 0.636e6).abs() < 1e3, "{f}");
    assert!((r.displacement - 0.496 * 1e-4).abs() < 1e-9);
}

#[test]
fn zero_distance_inward_is_storage_outside() {
    let cfg = calibrated_config();
    let r = run_transport_interface(&cfg, Direction::Inward, &[0.0])
        .unwrap()
        .remove(0);
    let mut outside = cfg.clone();
    outside.protocol.storage_position = cfg.protocol.inward_start;
    let s = run_store_retrieve(&outside, 0.0).unwrap();
    assert_eq!(r.efficiency, s.efficiency);
    assert_eq!(r.metadata["ramp_pairs"], 0.0);
}

#[test]
fn outward_start_matches_in_fiber_storage() {
    let cfg = calibrated_config();
    let out = run_transport_interface(&cfg, Direction::Outward, &[0.0])
        .unwrap()
        .remove(0);
    let inside = run_store_retrieve(&cfg, 0.0).unwrap();
    assert!(((out.efficiency - inside.efficiency) / inside.efficiency).abs() < 0.05);
}

#[test]
fn efficiency_is_amplitude_invariant() {
    let cfg = calibrated_config();
    let mut bright = cfg.clone();
    bright.probe.rabi_peak *= 5.0;
    let a = run_transport_inside(&cfg, 1e-3).unwrap().efficiency;
    let b = run_transport_inside(&bright, 1e-3).unwrap().efficiency;
    assert!(((a - b) / a).abs() < 1e-12);
}

#[test]
fn no_protocol_beats_immediate_retrieval() {
    let cfg = calibrated_config();
    let best = run_store_retrieve(&cfg, 0.0).unwrap().efficiency;
    for p in Protocol::ALL {
        for r in run_protocol(&cfg, p).unwrap() {
            assert!(r.efficiency <= best + 1e-9, "{p}: {}", r.efficiency);
            assert!(r.efficiency >= 0.0 && r.reference_energy > 0.0);
        }
    }
}

#[test]
fn transport_time_sweep_declines() {
    let rows = sweep(
        &calibrated_config(),
        Protocol::TransportInside,
        "protocol.transport_time_ms",
        &[0.5, 1.0, 2.0, 3.0],
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1].result.efficiency < w[0].result.efficiency));
    let csv = sweep_to_csv("protocol.transport_time_ms", &rows);
    assert!(csv.starts_with("parameter,value,index,protocol,eta,elapsed_ms,transport_time_ms"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn storage_sweep_fit_recovers_lifetime() {
    let rows = sweep(
        &calibrated_config(),
        Protocol::StoreRetrieve,
        "protocol.storage_time_us",
        &[5.0, 100.0, 400.0, 1000.0],
    )
    .unwrap();
    let pts: Vec<_> = rows.iter().map(|r| r.point(false)).collect();
    let fit = fit_exponential(&pts).unwrap();
    assert!(((fit.tau - 3.1e-3) / 3.1e-3).abs() < 1e-6, "{}", fit.tau);
}

#[test]
fn stored_x_r_is_the_calibrated_value() {
    let cfg = calibrated_config();
    let (x_r, ratio) = calibrate_x_r(&cfg, 0.5, 2e-3).unwrap();
    assert!(((x_r - cfg.medium.od_scale.x_r) / x_r).abs() < 1e-3, "{x_r}");
    assert!((ratio - 0.5).abs() < 1e-3);
}

#[test]
fn protocol_dispatch_from_names() {
    let cfg = calibrated_config();
    let rows = run_protocol(&cfg, "transport_outward".parse().unwrap()).unwrap();
    assert_eq!(rows.len(), cfg.protocol.interface_distances.len());
    assert!(rows
        .windows(2)
        .all(|w| w[1].retrieval_position < w[0].retrieval_position));
}
