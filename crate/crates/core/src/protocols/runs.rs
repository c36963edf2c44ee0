//! Store/retrieve and transport scenarios.
//!
//! Every scenario has the same skeleton: write the probe into the cloud while
//! the control is on, switch the control off, skip the storage interval in
//! closed form (moving the cloud if the conveyor runs), then switch the
//! control back on and integrate the retrieval window. Lifetime decay, ramp
//! penalty and atom loss are applied to the stored spin wave during the skip.

use std::collections::BTreeMap;

use super::{storage_efficiency, Protocol, ProtocolError, ProtocolResult};
use crate::config::ExperimentConfig;
use crate::conveyor::{check_feasible, max_acceleration, plan_distance, plan_duration, Trajectory};
use crate::eit::{ControlSchedule, Motion, Solver, TimeSeries};
use crate::medium::{ramp_penalty, storage_decay_factor};

/// Transport direction for interface scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From free space into the fiber.
    Inward,
    /// From inside the fiber out into free space.
    Outward,
}

/// Everything that distinguishes one scenario from another.
struct RunPlan<'a> {
    name: &'a str,
    storage_position: f64,
    /// Motion during the storage interval only, starting at rest.
    transport: Option<Trajectory>,
    /// Constant velocity for the whole run (co-moving storage).
    drift_velocity: f64,
    /// Storage interval, s.
    hold: f64,
    tau: f64,
    ramp_pairs: u32,
}

/// Reference pulse through an empty medium, and its energy.
pub fn reference_run(cfg: &ExperimentConfig) -> Result<(TimeSeries, f64), ProtocolError> {
    let mut empty = cfg.clone();
    empty.medium.od_fiber = 0.0;
    let schedule = ControlSchedule::constant(cfg.control.rabi);
    let mut solver = Solver::new(
        &empty,
        Motion::at_rest(cfg.protocol.storage_position),
        schedule,
        cfg.probe,
    )?;
    let t_end = cfg.probe.end_time(1e-8) * 1e6;
    solver.run_until(t_end)?;
    let series = solver.into_series();
    let energy = crate::eit::output_pulse_energy(&series, 0.0, t_end)?;
    if !(energy > 0.0) {
        return Err(ProtocolError::ZeroReference);
    }
    Ok((series, energy))
}

fn execute(cfg: &ExperimentConfig, plan: RunPlan) -> Result<ProtocolResult, ProtocolError> {
    let ctl = &cfg.control;
    // the write phase lasts until the probe tail has passed
    let t_store = (ctl.switch_off + ctl.ramp + cfg.numerics.settle).max(cfg.probe.end_time(1e-10));
    let t_on = t_store + plan.hold;
    let t_end = t_on + ctl.ramp + ctl.retrieval_window;

    let motion = if plan.drift_velocity != 0.0 {
        Motion {
            origin: plan.storage_position,
            trajectory: Trajectory::from_velocity_ramps(&[(t_end, plan.drift_velocity, plan.drift_velocity)]),
            t_start: 0.0,
        }
    } else if let Some(traj) = &plan.transport {
        Motion {
            origin: plan.storage_position,
            trajectory: traj.clone(),
            t_start: t_store,
        }
    } else {
        Motion::at_rest(plan.storage_position)
    };

    let schedule = ControlSchedule::store_retrieve(ctl.rabi, ctl.switch_off, ctl.ramp, Some(t_on));
    let mut solver = Solver::new(cfg, motion, schedule, cfg.probe)?;
    solver.run_until(t_store * 1e6)?;
    solver.snapshot("stored");
    let lab_at_store = solver.state().lab_offset;
    if plan.transport.is_some() {
        solver.add_event("transport_start", t_store * 1e6);
    }
    solver.hold(plan.hold * 1e6)?;
    if let Some(traj) = &plan.transport {
        solver.add_event("transport_stop", (t_store + traj.t_total()) * 1e6);
    }

    let decay = storage_decay_factor(plan.hold, plan.tau);
    let penalty = ramp_penalty(plan.ramp_pairs, cfg.medium.ramp_penalty_eps);
    solver.scale_spin_wave((decay * penalty).sqrt());
    if cfg.medium.loss_rate > 0.0 {
        solver.set_atom_fraction((-cfg.medium.loss_rate * plan.hold).exp());
    }
    solver.snapshot("before_retrieval");
    let lab_at_read = solver.state().lab_offset;
    solver.run_until(t_end * 1e6)?;
    let series = solver.into_series();

    let (reference_series, reference_energy) = reference_run(cfg)?;
    let window = (t_on * 1e6, (t_on + ctl.retrieval_window) * 1e6);
    let ref_window = (0.0, *reference_series.t.last().expect("non-empty"));
    let efficiency = storage_efficiency(&series, window, &reference_series, ref_window)?;

    let mut metadata = BTreeMap::new();
    metadata.insert("tau_s".into(), plan.tau);
    metadata.insert("decay_factor".into(), decay);
    metadata.insert("ramp_pairs".into(), plan.ramp_pairs as f64);
    metadata.insert("ramp_penalty_eps".into(), cfg.medium.ramp_penalty_eps);
    metadata.insert("od_fiber".into(), cfg.medium.od_fiber);
    metadata.insert("x_r_m".into(), cfg.medium.od_scale.x_r);
    metadata.insert("control_ramp_s".into(), ctl.ramp);
    metadata.insert("switch_off_s".into(), ctl.switch_off);
    metadata.insert("control_rabi_over_gamma".into(), ctl.rabi / cfg.species.gamma);
    if plan.drift_velocity != 0.0 {
        metadata.insert("velocity_mps".into(), plan.drift_velocity);
        metadata.insert(
            "one_photon_doppler_hz".into(),
            crate::conveyor::doppler_single_photon(plan.drift_velocity, cfg.species.lambda_probe),
        );
    }

    Ok(ProtocolResult {
        protocol: plan.name.to_string(),
        efficiency,
        retrieved_energy: efficiency * reference_energy,
        reference_energy,
        elapsed: plan.hold,
        transport_time: plan.transport.as_ref().map_or(0.0, |t| t.t_total()),
        displacement: (lab_at_read - lab_at_store) * 1e-3,
        storage_position: lab_at_store * 1e-3,
        retrieval_position: lab_at_read * 1e-3,
        retrieval_window: window,
        series,
        reference_series,
        metadata,
    })
}

fn ensure_feasible(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<(), ProtocolError> {
    let a_max = max_acceleration(cfg.lattice.trap_depth, cfg.lattice.lambda, cfg.species.mass);
    let violations = check_feasible(traj, a_max, cfg.protocol.safety);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ProtocolError::Infeasible(violations))
    }
}

/// Store at the configured in-fiber position and retrieve after `storage_time` (s).
pub fn run_store_retrieve(cfg: &ExperimentConfig, storage_time: f64) -> Result<ProtocolResult, ProtocolError> {
    if storage_time < 0.0 {
        return Err(ProtocolError::Invalid(format!("negative storage time {storage_time}")));
    }
    execute(
        cfg,
        RunPlan {
            name: Protocol::StoreRetrieve.name(),
            storage_position: cfg.protocol.storage_position,
            transport: None,
            drift_velocity: 0.0,
            hold: storage_time,
            tau: cfg.medium.tau_storage,
            ramp_pairs: 0,
        },
    )
}

/// Store at rest, run the conveyor for `transport_time` (s, ramps included),
/// retrieve at rest. One ramp pair is always charged.
pub fn run_transport_inside(cfg: &ExperimentConfig, transport_time: f64) -> Result<ProtocolResult, ProtocolError> {
    if transport_time < 0.0 {
        return Err(ProtocolError::Invalid(format!(
            "negative transport time {transport_time}"
        )));
    }
    let p = &cfg.protocol;
    let traj = plan_duration(transport_time, p.transport_speed, p.ramp_time);
    ensure_feasible(cfg, &traj)?;
    execute(
        cfg,
        RunPlan {
            name: Protocol::TransportInside.name(),
            storage_position: p.storage_position,
            transport: Some(traj),
            drift_velocity: 0.0,
            hold: transport_time,
            tau: p.tau_transport,
            ramp_pairs: 1,
        },
    )
}

/// Stores at the direction's start position and moves the stored light by
/// each of `distances` (m, unsigned). Zero distance means no conveyor motion.
pub fn run_transport_interface(
    cfg: &ExperimentConfig,
    direction: Direction,
    distances: &[f64],
) -> Result<Vec<ProtocolResult>, ProtocolError> {
    let p = &cfg.protocol;
    let (start, sign, name) = match direction {
        Direction::Inward => (p.inward_start, 1.0, Protocol::TransportInward.name()),
        Direction::Outward => (p.outward_start, -1.0, Protocol::TransportOutward.name()),
    };
    distances
        .iter()
        .map(|&d| {
            if d < 0.0 {
                return Err(ProtocolError::Invalid(format!("negative distance {d}")));
            }
            let traj = plan_distance(sign * d, p.transport_speed, p.ramp_time);
            ensure_feasible(cfg, &traj)?;
            let moving = traj.t_total() > 0.0;
            execute(
                cfg,
                RunPlan {
                    name,
                    storage_position: start,
                    hold: traj.t_total(),
                    transport: moving.then_some(traj),
                    drift_velocity: 0.0,
                    tau: cfg.medium.tau_storage,
                    ramp_pairs: u32::from(moving),
                },
            )
        })
        .collect()
}

/// Storage and retrieval in a cloud moving at constant `velocity` (m/s) the
/// whole time; the storage interval is `storage_time` (s).
pub fn run_comoving(cfg: &ExperimentConfig, velocity: f64, storage_time: f64) -> Result<ProtocolResult, ProtocolError> {
    if storage_time < 0.0 {
        return Err(ProtocolError::Invalid(format!("negative storage time {storage_time}")));
    }
    let p = &cfg.protocol;
    if velocity == 0.0 {
        let mut r = run_store_retrieve(cfg, storage_time)?;
        r.protocol = Protocol::Comoving.name().into();
        r.metadata.insert("tau_s".into(), cfg.medium.tau_storage);
        return Ok(r);
    }
    let a_max = max_acceleration(cfg.lattice.trap_depth, cfg.lattice.lambda, cfg.species.mass);
    let v_limit = p.safety * a_max * p.ramp_time;
    if velocity.abs() >= v_limit {
        return Err(ProtocolError::Invalid(format!(
            "|v| = {velocity} m/s is not reachable within a {} s ramp (limit {v_limit} m/s)",
            p.ramp_time
        )));
    }
    let ctl = &cfg.control;
    let write = (ctl.switch_off + ctl.ramp + cfg.numerics.settle).max(cfg.probe.end_time(1e-10));
    let total = write + storage_time + ctl.ramp + ctl.retrieval_window;
    let (tip, end) = (cfg.fiber.tip_position, cfg.fiber.tip_position + cfg.fiber.length);
    let final_center = p.storage_position + velocity * total;
    for x in [p.storage_position, final_center] {
        if x < tip || x > end {
            return Err(ProtocolError::LeavesFiber(format!(
                "cloud center at {x:.4e} m is outside [{tip:.4e}, {end:.4e}] m"
            )));
        }
    }
    execute(
        cfg,
        RunPlan {
            name: Protocol::Comoving.name(),
            storage_position: p.storage_position,
            transport: None,
            drift_velocity: velocity,
            hold: storage_time,
            tau: p.tau_comoving,
            ramp_pairs: 0,
        },
    )
}

/// Runs a named protocol with the parameters from `cfg.protocol`.
pub fn run_protocol(cfg: &ExperimentConfig, protocol: Protocol) -> Result<Vec<ProtocolResult>, ProtocolError> {
    let p = &cfg.protocol;
    match protocol {
        Protocol::StoreRetrieve => Ok(vec![run_store_retrieve(cfg, p.storage_time)?]),
        Protocol::TransportInside => Ok(vec![run_transport_inside(cfg, p.transport_time)?]),
        Protocol::TransportInward => run_transport_interface(cfg, Direction::Inward, &p.interface_distances),
        Protocol::TransportOutward => run_transport_interface(cfg, Direction::Outward, &p.interface_distances),
        Protocol::Comoving => Ok(vec![run_comoving(cfg, p.comoving_speed, p.comoving_storage_time)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_times_are_rejected() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            run_store_retrieve(&cfg, -1e-6),
            Err(ProtocolError::Invalid(_))
        ));
        assert!(matches!(
            run_transport_inside(&cfg, -1e-3),
            Err(ProtocolError::Invalid(_))
        ));
    }

    #[test]
    fn infeasible_transport_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.protocol.ramp_time = 1e-7;
        cfg.protocol.transport_speed = 0.5;
        assert!(matches!(
            run_transport_inside(&cfg, 1e-3),
            Err(ProtocolError::Infeasible(_))
        ));
    }

    #[test]
    fn comoving_must_stay_in_fiber() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            run_comoving(&cfg, -0.496, 2.54e-3),
            Err(ProtocolError::LeavesFiber(_))
        ));
    }

    #[test]
    fn storage_time_zero_has_no_decay() {
        let cfg = ExperimentConfig::default();
        let r = run_store_retrieve(&cfg, 0.0).unwrap();
        assert_eq!(r.metadata["decay_factor"], 1.0);
        assert!(r.efficiency > 0.0 && r.efficiency < 1.0);
        assert_eq!(r.displacement, 0.0);
    }
}
