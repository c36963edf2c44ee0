//! `plan`: conveyor ramp table with a feasibility report.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use storedlight::conveyor::{
    check_feasible, detuning_from_speed, max_acceleration, plan_distance, Trajectory, TrajectorySpec,
};

use crate::error::{CliError, CliResult};
use crate::output::{config_hash, OutDir};
use crate::setup::ConfigArgs;

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Signed distance to cover, mm (positive moves towards the fiber).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "trapezoid")]
    pub distance_mm: Option<f64>,
    /// Cruise speed for --distance-mm, m/s [default: protocol.transport_speed_mps].
    #[arg(long)]
    pub speed_mps: Option<f64>,
    /// Ramp duration for --distance-mm, ms [default: protocol.ramp_ms].
    #[arg(long)]
    pub ramp_ms: Option<f64>,
    /// Detuning trapezoid PEAK_kHz,UP_ms,HOLD_ms,DOWN_ms. Without this or
    /// --distance-mm the configured trajectory is used.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub trapezoid: Vec<f64>,
    /// Table rows per segment.
    #[arg(long, default_value_t = 50)]
    pub points_per_segment: usize,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const PLAN_HEADER: &str = "t_ms,detuning_Hz,x_mm,v_mps,a_mps2\n";

/// Rows at `per_segment` even steps inside every segment plus the final instant.
/// A motionless plan has no rows.
pub fn ramp_table(traj: &Trajectory, lambda_lattice: f64, per_segment: usize) -> String {
    let mut out = String::from(PLAN_HEADER);
    let mut row = |t: f64| {
        let (x, v, a) = traj.sample_clamped(t);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t * 1e3,
            detuning_from_speed(v, lambda_lattice),
            x * 1e3,
            v,
            a
        ));
    };
    for seg in traj.segments() {
        for i in 0..per_segment {
            row(seg.t_start + seg.duration * i as f64 / per_segment as f64);
        }
    }
    if !traj.segments().is_empty() {
        row(traj.t_total());
    }
    out
}

pub fn run(args: &PlanArgs) -> CliResult<()> {
    let cfg = args.config.load()?;
    if args.points_per_segment == 0 {
        return Err(CliError::Usage("--points-per-segment must be at least 1".into()));
    }
    let lambda = cfg.lattice.lambda;
    let (traj, source) = if let Some(d) = args.distance_mm {
        let speed = args.speed_mps.unwrap_or(cfg.protocol.transport_speed);
        let ramp = args.ramp_ms.map_or(cfg.protocol.ramp_time, |r| r * 1e-3);
        if !(speed > 0.0 && ramp > 0.0 && d.is_finite()) {
            return Err(CliError::Input(format!(
                "distance plan needs finite distance, speed > 0 and ramp > 0 (got {d} mm, {speed} m/s, {ramp} s)"
            )));
        }
        (plan_distance(d * 1e-3, speed, ramp), "distance")
    } else {
        let spec = match args.trapezoid[..] {
            [] => cfg.trajectory_spec.clone(),
            [peak, up, hold, down] => TrajectorySpec::trapezoid(peak * 1e3, up * 1e-3, hold * 1e-3, down * 1e-3),
            _ => {
                return Err(CliError::Usage(
                    "--trapezoid takes PEAK_kHz,UP_ms,HOLD_ms,DOWN_ms".into(),
                ))
            }
        };
        let traj = Trajectory::from_spec(&spec, lambda).map_err(|e| CliError::Input(e.to_string()))?;
        (
            traj,
            if args.trapezoid.is_empty() {
                "config"
            } else {
                "trapezoid"
            },
        )
    };

    let a_max = max_acceleration(cfg.lattice.trap_depth, lambda, cfg.species.mass);
    let violations = check_feasible(&traj, a_max, cfg.protocol.safety);
    if !violations.is_empty() {
        let detail: Vec<String> = violations
            .iter()
            .map(|v| {
                format!(
                    "segment {} needs |a| = {:.4e} m/s² > {:.4e} m/s²",
                    v.segment,
                    v.accel.abs(),
                    v.limit
                )
            })
            .collect();
        return Err(CliError::Infeasible(format!(
            "acceleration infeasible: {}",
            detail.join("; ")
        )));
    }

    let mut out = OutDir::create(OutDir::resolve(args.out_dir.as_deref()))?;
    out.write("config.toml", &cfg.to_toml_string())?;
    out.write("plan.csv", &ramp_table(&traj, lambda, args.points_per_segment))?;
    let summary = json!({
        "source": source,
        "duration_ms": traj.t_total() * 1e3,
        "displacement_mm": traj.displacement() * 1e3,
        "max_speed_mps": traj.max_speed(),
        "max_accel_mps2": traj.max_abs_accel(),
        "a_max_mps2": a_max,
        "safety": cfg.protocol.safety,
        "feasible": true,
        "segments": traj.segments(),
    });
    out.write_json("plan.json", &summary)?;
    say!(
        "plan: {:.4} ms, {:.4} mm, peak |a| = {:.4e} m/s² (limit {:.4e})",
        traj.t_total() * 1e3,
        traj.displacement() * 1e3,
        traj.max_abs_accel(),
        cfg.protocol.safety * a_max
    );
    let dir = out.finish(Some(config_hash(&cfg)), None, None)?;
    say!("wrote {}", dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_plan_is_header_only() {
        assert_eq!(ramp_table(&Trajectory::stationary(), 810e-9, 10), PLAN_HEADER);
    }

    #[test]
    fn table_ends_at_the_displacement() {
        let traj = plan_distance(1.44e-3, 0.496, 1e-4);
        let table = ramp_table(&traj, 810e-9, 4);
        let last: Vec<f64> = table
            .lines()
            .last()
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert!((last[2] - 1.44).abs() < 1e-9);
        assert_eq!(last[3], 0.0);
        assert_eq!(table.lines().count(), 1 + 3 * 4 + 1);
    }
}
