//! Measurements shared by the oracle tests and the acceptance report.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use rustfft::FftPlanner;
use storedlight::eit::{output_pulse_energy, simulate, ControlSchedule, LambdaParams, Motion, Solver};
use storedlight::polariton::{normalised_fields, PolaritonView};
use storedlight::{ExperimentConfig, ProbePulse, TimeSeries};

pub fn calibrated_config() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/calibrated.toml");
    ExperimentConfig::load(path).expect("configs/calibrated.toml loads")
}

/// Cloud far inside the fiber, so the whole window sees the fiber OD.
pub fn deep_config(od: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.medium.od_fiber = od;
    cfg.cloud.center = 20e-3;
    cfg
}

pub fn pulse(cfg: &ExperimentConfig, center_us: f64, fwhm_us: f64) -> ProbePulse {
    ProbePulse {
        center: center_us * 1e-6,
        fwhm: fwhm_us * 1e-6,
        ..cfg.probe
    }
}

fn energy(series: &TimeSeries) -> f64 {
    output_pulse_energy(series, series.t[0], *series.t.last().unwrap()).unwrap()
}

/// Energy transmission of a pulse through `cfg` with a constant control.
pub fn transmission(cfg: &ExperimentConfig, omega_c: f64, probe: &ProbePulse) -> f64 {
    let schedule = ControlSchedule::constant(omega_c);
    let out = simulate(cfg, None, &schedule, probe).unwrap();
    let mut empty = cfg.clone();
    empty.medium.od_fiber = 0.0;
    let reference = simulate(&empty, None, &schedule, probe).unwrap();
    energy(&out) / energy(&reference)
}

/// Relative L2 distance between the solver output and the input pulse
/// propagated through the analytic transfer function.
pub fn transfer_function_error(cfg: &ExperimentConfig, omega_c: f64, probe: &ProbePulse) -> f64 {
    let out = simulate(cfg, None, &ControlSchedule::constant(omega_c), probe).unwrap();
    let n = out.t.len();
    let h = out.t[1] - out.t[0];
    // zero padding keeps the circular convolution from wrapping
    let m = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m)
        .map(|i| {
            if i < n {
                Complex64::new(probe.envelope(out.t[i] * 1e-6) * 1e-6, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let params = LambdaParams {
        gamma: cfg.species.gamma * 1e-6,
        delta: probe.detuning * 1e-6,
        delta2: cfg.control.two_photon_detuning * 1e-6,
        gamma_s: cfg.medium.spin_decoherence * 1e-6,
    };
    let od = storedlight::medium::effective_od(&cfg.cloud, &cfg.medium, &cfg.fiber);
    let dw = std::f64::consts::TAU / (m as f64 * h);
    for (k, x) in buf.iter_mut().enumerate() {
        let k = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
        // bin k oscillates as e^{+iω_k t}, i.e. offset ω = −ω_k in the e^{−iωt} convention
        *x *= params.transfer(od, omega_c * 1e-6, -k * dw);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let (mut diff, mut norm) = (0.0, 0.0);
    for (b, e) in buf.iter().zip(&out.field) {
        let expect = b / m as f64;
        diff += (e - expect).norm_sqr();
        norm += expect.norm_sqr();
    }
    (diff / norm).sqrt()
}

/// Default store-retrieve sequence of `cfg` run through `simulate`.
pub fn storage_series(cfg: &ExperimentConfig) -> (TimeSeries, f64) {
    let c = &cfg.control;
    let t_on = c.switch_off + c.ramp + 2e-6;
    let schedule = ControlSchedule::store_retrieve(c.rabi, c.switch_off, c.ramp, Some(t_on));
    (simulate(cfg, None, &schedule, &cfg.probe).unwrap(), t_on * 1e6)
}

/// max |E_α − α·E_1| / max |α·E_1| over a store-retrieve run.
pub fn linearity_error(alpha: f64) -> f64 {
    let cfg = ExperimentConfig::default();
    let (base, _) = storage_series(&cfg);
    let mut scaled = cfg.clone();
    scaled.probe.rabi_peak *= alpha;
    let (out, _) = storage_series(&scaled);
    let peak = base.field.iter().map(|e| (alpha * e).norm()).fold(0.0, f64::max);
    base.field
        .iter()
        .zip(&out.field)
        .map(|(a, b)| (alpha * a - b).norm())
        .fold(0.0, f64::max)
        / peak
}

/// Retrieved energy with default numerics and with dz, dt halved.
pub fn grid_halving() -> (f64, f64) {
    let cfg = ExperimentConfig::default();
    let retrieved = |cfg: &ExperimentConfig| {
        let (series, t_on) = storage_series(cfg);
        output_pulse_energy(&series, t_on, t_on + 5.0).unwrap()
    };
    let mut fine = cfg.clone();
    fine.numerics.points_per_width *= 2.0;
    fine.numerics.dt_divisor *= 2.0;
    (retrieved(&cfg), retrieved(&fine))
}

/// Slow switch-off in a dense medium: (dark-polariton norm just before the
/// switch, spin-wave norm after it).
pub fn adiabatic_storage() -> (f64, f64) {
    let mut cfg = deep_config(400.0);
    cfg.numerics.points_per_width = 100.0;
    let omega_c = cfg.species.gamma;
    cfg.control.rabi = omega_c;
    cfg.probe = pulse(&cfg, 6.0, 2.0);
    let (t_off, ramp) = (11e-6, 1e-6);
    let schedule = ControlSchedule::store_retrieve(omega_c, t_off, ramp, None);
    let mut solver = Solver::new(&cfg, Motion::at_rest(cfg.cloud.center), schedule, cfg.probe).unwrap();
    let gamma = solver.params().gamma;
    solver.run_until(t_off * 1e6).unwrap();
    let before = PolaritonView::from_state(solver.state(), solver.coupling(), gamma, omega_c * 1e-6).unwrap();
    solver.run_until((t_off + ramp) * 1e6 + 0.5).unwrap();
    let after = PolaritonView::from_state(solver.state(), solver.coupling(), gamma, 0.0).unwrap();
    (before.dark_norm(), after.spin_norm())
}

/// Relative drift of ∫|S|² per ms while stored: (integrated for 20 µs, skipped 1 ms).
pub fn stored_norm_drift() -> (f64, f64) {
    let cfg = ExperimentConfig::default();
    let c = &cfg.control;
    let schedule = ControlSchedule::store_retrieve(c.rabi, c.switch_off, c.ramp, None);
    let mut solver = Solver::new(&cfg, Motion::at_rest(cfg.cloud.center), schedule, cfg.probe).unwrap();
    let t_store = cfg.probe.end_time(1e-10) * 1e6;
    solver.run_until(t_store).unwrap();
    let n0 = solver.state().spin_norm();
    solver.run_until(t_store + 20.0).unwrap();
    let n1 = solver.state().spin_norm();
    solver.hold(1000.0).unwrap();
    let n2 = solver.state().spin_norm();
    (((n1 - n0) / n0).abs() / 0.02, ((n2 - n1) / n1).abs())
}

/// Relative L2 error of shifting a stored spin wave by `d` mm and back.
pub fn advection_round_trip(d: f64) -> f64 {
    let cfg = ExperimentConfig::default();
    let c = &cfg.control;
    let schedule = ControlSchedule::store_retrieve(c.rabi, c.switch_off, c.ramp, None);
    let mut solver = Solver::new(&cfg, Motion::at_rest(cfg.cloud.center), schedule, cfg.probe).unwrap();
    solver.run_until(cfg.probe.end_time(1e-10) * 1e6).unwrap();
    let st = solver.state();
    // collective spin wave: the per-atom coherence weighted by the atom density
    let (_, s_hat) = normalised_fields(st, solver.coupling(), solver.params().gamma).unwrap();
    let there = storedlight::eit::advect_spin_wave(&s_hat, st.dz(), d);
    let back = storedlight::eit::advect_spin_wave(&there.s, st.dz(), -d);
    let err: f64 = back.s.iter().zip(&s_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = s_hat.iter().map(|a| a.norm_sqr()).sum();
    (err / norm).sqrt()
}
