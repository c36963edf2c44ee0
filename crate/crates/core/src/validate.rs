//! Invariant and cross-consistency checks on a resolved configuration.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::conveyor::{check_feasible, max_acceleration, plan_duration, AccelViolation, Trajectory};

/// Problems found by [`validate_config`]. Violations make a config unusable;
/// warnings flag a regime where the model is questionable.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }

    fn warn(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.warnings.push(msg());
        }
    }

    fn infeasible(&mut self, what: &str, v: &[AccelViolation]) {
        for x in v {
            self.violations.push(format!(
                "acceleration infeasible: {what} segment {} needs |a| = {:.4e} m/s² > {:.4e} m/s²",
                x.segment,
                x.accel.abs(),
                x.limit
            ));
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn non_negative(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}

pub fn validate_config(cfg: &ExperimentConfig) -> ValidationReport {
    let mut r = ValidationReport::default();

    let sp = &cfg.species;
    for (name, v) in [
        ("species.mass", sp.mass),
        ("species.gamma", sp.gamma),
        ("species.lambda_probe", sp.lambda_probe),
        ("species.delta_hf", sp.delta_hf),
    ] {
        r.require(positive(v), || format!("{name} must be positive, got {v}"));
    }

    let l = &cfg.lattice;
    r.require(positive(l.lambda), || {
        format!("lattice wavelength must be positive, got {}", l.lambda)
    });
    r.require(positive(l.trap_depth), || {
        format!("trap depth must be positive, got {}", l.trap_depth)
    });
    r.require(non_negative(l.omega_z) && non_negative(l.omega_r), || {
        "trap frequencies must be non-negative".into()
    });

    let c = &cfg.cloud;
    r.require(non_negative(c.atom_number), || {
        format!("atom number must be ≥ 0, got {}", c.atom_number)
    });
    r.require(positive(c.width_1e), || {
        format!("cloud width must be positive, got {}", c.width_1e)
    });
    r.require(c.center.is_finite(), || "cloud center must be finite".into());

    let f = &cfg.fiber;
    r.require(positive(f.length), || {
        format!("fiber length must be positive, got {}", f.length)
    });
    r.require(positive(f.mot_distance), || {
        format!("MOT distance must be positive, got {}", f.mot_distance)
    });
    r.require(positive(f.mode_field_diameter), || {
        "mode-field diameter must be positive".into()
    });

    let m = &cfg.medium;
    r.require(non_negative(m.od_fiber), || {
        format!("fiber OD must be ≥ 0, got {}", m.od_fiber)
    });
    r.require(positive(m.od_reference_atoms), || {
        "reference atom number must be positive".into()
    });
    r.require(positive(m.tau_storage), || {
        format!("storage lifetime must be positive, got {}", m.tau_storage)
    });
    r.require((0.0..=1.0).contains(&m.ramp_penalty_eps), || {
        format!("ramp penalty must lie in [0, 1], got {}", m.ramp_penalty_eps)
    });
    r.require(positive(m.od_scale.x_r), || {
        format!("x_R must be positive, got {}", m.od_scale.x_r)
    });
    r.require((0.0..=1.0).contains(&m.od_scale.floor), || {
        format!("OD floor must lie in [0, 1], got {}", m.od_scale.floor)
    });
    r.require(non_negative(m.loss_rate), || {
        format!("loss rate must be ≥ 0, got {}", m.loss_rate)
    });
    r.require(non_negative(m.spin_decoherence), || {
        "spin decoherence must be ≥ 0".into()
    });

    let p = &cfg.probe;
    let ctl = &cfg.control;
    r.require(positive(p.fwhm), || {
        format!("probe FWHM must be positive, got {}", p.fwhm)
    });
    r.require(non_negative(p.rabi_peak), || "probe Rabi frequency must be ≥ 0".into());
    r.require(p.detuning.is_finite(), || "probe detuning must be finite".into());
    r.require(non_negative(ctl.rabi), || "control Rabi frequency must be ≥ 0".into());
    r.require(positive(ctl.ramp), || {
        format!("control edge must be positive, got {}", ctl.ramp)
    });
    r.require(positive(ctl.retrieval_window), || {
        "retrieval window must be positive".into()
    });
    r.require(non_negative(ctl.switch_off), || "switch-off time must be ≥ 0".into());
    r.warn(p.is_weak(ctl.rabi, sp.gamma), || {
        format!(
            "probe Rabi frequency {:.3e} rad/s is not ≪ Ω_c and Γ; weak-probe model questionable",
            p.rabi_peak
        )
    });
    if positive(p.fwhm) && p.rabi_peak > 0.0 {
        // the pulse must start inside the simulated window
        r.require(p.envelope(0.0) <= 1e-6 * p.rabi_peak, || {
            format!(
                "probe pulse (center {:.3e} s, FWHM {:.3e} s) starts before t = 0",
                p.center, p.fwhm
            )
        });
        r.warn(
            (p.center - 2.0 * p.fwhm..=p.center + 2.0 * p.fwhm).contains(&ctl.switch_off),
            || "control switch-off lies outside the probe pulse; little light will be stored".into(),
        );
    }

    let num = &cfg.numerics;
    r.require(num.points_per_width >= 20.0, || {
        format!("{} grid points per cloud width, need at least 20", num.points_per_width)
    });
    r.require(num.dt_divisor >= 5.0, || {
        format!("dt divisor {} too small", num.dt_divisor)
    });
    r.require(positive(num.window_widths), || "window must be positive".into());
    r.warn(num.window_widths >= 4.0, || {
        "grid window narrower than 4 cloud widths clips the cloud".into()
    });
    r.require(num.output_stride >= 1, || "output stride must be ≥ 1".into());
    r.require(non_negative(num.settle), || "settle time must be ≥ 0".into());

    let pr = &cfg.protocol;
    r.require(non_negative(pr.storage_time), || {
        format!("negative storage time {}", pr.storage_time)
    });
    r.require(non_negative(pr.transport_time), || {
        format!("negative transport time {}", pr.transport_time)
    });
    r.require(non_negative(pr.comoving_storage_time), || {
        "negative co-moving storage time".into()
    });
    r.require(pr.transport_speed.is_finite(), || {
        "transport speed must be finite".into()
    });
    r.require(positive(pr.ramp_time), || {
        format!("conveyor ramp time must be positive, got {}", pr.ramp_time)
    });
    r.require(pr.safety > 0.0 && pr.safety <= 1.0, || {
        format!("safety factor must lie in (0, 1], got {}", pr.safety)
    });
    r.require(pr.interface_distances.iter().all(|&d| non_negative(d)), || {
        "interface distances must be ≥ 0".into()
    });
    r.require(positive(pr.tau_transport) && positive(pr.tau_comoving), || {
        "scenario lifetimes must be positive".into()
    });

    // kinematic feasibility
    if positive(l.trap_depth) && positive(l.lambda) && positive(sp.mass) && pr.safety > 0.0 {
        let a_max = max_acceleration(l.trap_depth, l.lambda, sp.mass);
        match Trajectory::from_spec(&cfg.trajectory_spec, l.lambda) {
            Ok(traj) => r.infeasible("trajectory", &check_feasible(&traj, a_max, pr.safety)),
            Err(e) => r.violations.push(format!("trajectory: {e}")),
        }
        if positive(pr.ramp_time) && non_negative(pr.transport_time) {
            let t = plan_duration(pr.transport_time, pr.transport_speed, pr.ramp_time);
            r.infeasible("transport plan", &check_feasible(&t, a_max, pr.safety));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conveyor::TrajectorySpec;

    #[test]
    fn default_config_is_valid() {
        let r = validate_config(&ExperimentConfig::default());
        assert!(r.is_valid(), "{:?}", r.violations);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }

    #[test]
    fn infeasible_trajectory_is_flagged() {
        // 0 → ~0.5 m/s in 0.5 µs is 10⁶ m/s²
        let cfg = ExperimentConfig {
            trajectory_spec: TrajectorySpec::trapezoid(1.2e6, 0.5e-6, 1e-3, 0.5e-6),
            ..Default::default()
        };
        let r = validate_config(&cfg);
        assert!(
            r.violations.iter().any(|v| v.starts_with("acceleration infeasible")),
            "{:?}",
            r.violations
        );
    }

    #[test]
    fn negative_storage_time_is_flagged() {
        let mut cfg = ExperimentConfig::default();
        cfg.protocol.storage_time = -1e-6;
        let r = validate_config(&cfg);
        assert!(r.violations.iter().any(|v| v.contains("negative storage time")));
    }

    #[test]
    fn type_invariants_are_checked() {
        let mut cfg = ExperimentConfig::default();
        cfg.cloud.width_1e = 0.0;
        cfg.medium.ramp_penalty_eps = 1.5;
        cfg.fiber.length = -1.0;
        cfg.numerics.points_per_width = 10.0;
        assert_eq!(validate_config(&cfg).violations.len(), 4);
    }

    #[test]
    fn probe_must_fit_in_window() {
        let mut cfg = ExperimentConfig::default();
        cfg.probe.center = 0.1e-6;
        assert!(!validate_config(&cfg).is_valid());
    }

    #[test]
    fn strong_probe_warns() {
        let mut cfg = ExperimentConfig::default();
        cfg.probe.rabi_peak = cfg.control.rabi;
        let r = validate_config(&cfg);
        assert!(r.is_valid());
        assert_eq!(r.warnings.len(), 1);
    }
}
