//! One-time calibration of the free model constants against target
//! efficiencies.
//!
//! Order of steps:
//! 0. control switching edge (and the switch-off time that maximises the
//!    efficiency for that edge) so the best efficiency after a reference
//!    storage time at rest equals the target;
//! 1. fiber OD, per-scenario lifetimes and the ramp penalty are set directly;
//! 2. x_R is chosen so that storing outside the fiber and carrying the light
//!    inside yields the target fraction of the all-in-fiber efficiency at the
//!    same elapsed time.

use serde::{Deserialize, Serialize};

use super::{run_store_retrieve, run_transport_inside, run_transport_interface, Direction, ProtocolError};
use crate::config::ExperimentConfig;

/// Target values the calibration reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// Best stationary efficiency after `stored_time`.
    pub eta_stored: f64,
    /// s
    pub stored_time: f64,
    pub od_fiber: f64,
    /// s
    pub tau_storage: f64,
    /// s
    pub tau_transport: f64,
    /// s
    pub tau_comoving: f64,
    /// Transported and stationary efficiencies whose ratio fixes the ramp penalty.
    pub eta_transported: f64,
    pub eta_stationary: f64,
    /// Inward-over-inside efficiency ratio at matched elapsed time.
    pub inward_ratio: f64,
    /// Inward transport distance used for the ratio, m.
    pub inward_distance: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            eta_stored: 0.04,
            stored_time: 3e-3,
            od_fiber: 5.0,
            tau_storage: 3.1e-3,
            tau_transport: 3.1e-3,
            tau_comoving: 2.6e-3,
            eta_transported: 0.03,
            eta_stationary: 0.04,
            inward_ratio: 0.5,
            inward_distance: 2e-3,
        }
    }
}

/// Calibrated constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// s
    pub control_ramp: f64,
    /// s
    pub switch_off: f64,
    /// Efficiency at a 5 µs storage time after calibration.
    pub eta_write_read: f64,
    pub od_fiber: f64,
    pub tau_storage: f64,
    pub tau_transport: f64,
    pub tau_comoving: f64,
    pub ramp_penalty_eps: f64,
    /// m
    pub x_r: f64,
    pub inward_ratio: f64,
}

impl Calibration {
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut out = cfg.clone();
        out.control.ramp = self.control_ramp;
        out.control.switch_off = self.switch_off;
        out.medium.od_fiber = self.od_fiber;
        out.medium.tau_storage = self.tau_storage;
        out.protocol.tau_transport = self.tau_transport;
        out.protocol.tau_comoving = self.tau_comoving;
        out.medium.ramp_penalty_eps = self.ramp_penalty_eps;
        out.medium.od_scale.x_r = self.x_r;
        out
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises `f` on [a, b] by golden-section search; returns (argmax, max).
fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64, ProtocolError>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64), ProtocolError> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Bisection for g(x) = 0 on a bracket with a sign change, in log x.
fn log_bisect(
    mut g: impl FnMut(f64) -> Result<f64, ProtocolError>,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64, ProtocolError> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let ga = g(lo)?;
    let gb = g(hi)?;
    if ga.signum() == gb.signum() {
        return Err(ProtocolError::Calibration(format!(
            "target not bracketed on [{lo:e}, {hi:e}] (residuals {ga:e}, {gb:e})"
        )));
    }
    while b - a > rel_tol {
        let m = 0.5 * (a + b);
        if g(m.exp())?.signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Best write-read efficiency over the switch-off time for a given edge.
fn best_switch_off(cfg: &ExperimentConfig, ramp: f64, storage_time: f64) -> Result<(f64, f64), ProtocolError> {
    let (c, w) = (cfg.probe.center, cfg.probe.fwhm);
    golden_max(
        |t_off| {
            let mut trial = cfg.clone();
            trial.control.ramp = ramp;
            trial.control.switch_off = t_off;
            Ok(run_store_retrieve(&trial, storage_time)?.efficiency)
        },
        c - 0.75 * w,
        c + 1.25 * w,
        2e-9,
    )
}

/// Step 0: returns (edge duration, switch-off time, efficiency).
pub fn calibrate_write_read(
    cfg: &ExperimentConfig,
    target: f64,
    storage_time: f64,
) -> Result<(f64, f64, f64), ProtocolError> {
    let ramps = [0.02e-6, 0.05e-6, 0.1e-6, 0.2e-6, 0.4e-6];
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for r in ramps {
        let (_, eta) = best_switch_off(cfg, r, storage_time)?;
        if let Some((r0, e0)) = prev {
            if (e0 - target).signum() != (eta - target).signum() {
                bracket = Some((r0, r));
                break;
            }
        }
        prev = Some((r, eta));
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        ProtocolError::Calibration(format!(
            "write-read efficiency {target} not reachable by the control edge"
        ))
    })?;
    let ramp = log_bisect(|r| Ok(best_switch_off(cfg, r, storage_time)?.1 - target), lo, hi, 1e-3)?;
    let (t_off, eta) = best_switch_off(cfg, ramp, storage_time)?;
    Ok((ramp, t_off, eta))
}

/// Inward-over-inside efficiency ratio for the current x_R.
pub fn inward_ratio(cfg: &ExperimentConfig, distance: f64) -> Result<f64, ProtocolError> {
    let inward = run_transport_interface(cfg, Direction::Inward, &[distance])?.remove(0);
    let inside = run_transport_inside(cfg, inward.elapsed)?;
    Ok(inward.efficiency / inside.efficiency)
}

/// Step 2: returns (x_R, achieved ratio).
pub fn calibrate_x_r(cfg: &ExperimentConfig, target_ratio: f64, distance: f64) -> Result<(f64, f64), ProtocolError> {
    let ratio_at = |x_r: f64| {
        let mut trial = cfg.clone();
        trial.medium.od_scale.x_r = x_r;
        inward_ratio(&trial, distance)
    };
    let x_r = log_bisect(|x| Ok(ratio_at(x)? - target_ratio), 1e-5, 1e-1, 1e-4)?;
    Ok((x_r, ratio_at(x_r)?))
}

/// Runs every step in order on top of `cfg`.
pub fn calibrate(cfg: &ExperimentConfig, targets: &CalibrationTargets) -> Result<Calibration, ProtocolError> {
    let mut work = cfg.clone();
    work.medium.od_fiber = targets.od_fiber;
    work.medium.tau_storage = targets.tau_storage;
    let (control_ramp, switch_off, _) = calibrate_write_read(&work, targets.eta_stored, targets.stored_time)?;
    let mut cal = Calibration {
        control_ramp,
        switch_off,
        eta_write_read: f64::NAN,
        od_fiber: targets.od_fiber,
        tau_storage: targets.tau_storage,
        tau_transport: targets.tau_transport,
        tau_comoving: targets.tau_comoving,
        ramp_penalty_eps: targets.eta_transported / targets.eta_stationary,
        x_r: cfg.medium.od_scale.x_r,
        inward_ratio: f64::NAN,
    };
    let work = cal.apply(cfg);
    cal.eta_write_read = run_store_retrieve(&work, 5e-6)?.efficiency;
    let (x_r, ratio) = calibrate_x_r(&work, targets.inward_ratio, targets.inward_distance)?;
    cal.x_r = x_r;
    cal.inward_ratio = ratio;
    Ok(cal)
}
