//! Optical conveyor-belt kinematics.
//!
//! Two lattice beams detuned by Δν form a standing wave whose nodes move at
//! v = Δν·λ/2. Detuning ramps that are linear in time give constant
//! acceleration, so every trajectory here is piecewise quadratic in position
//! and is kept in closed form instead of being pre-sampled.
//!
//! Units are SI throughout this module (s, m, m/s, Hz). Positive x points from
//! the MOT into the fiber.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{PHYS, TWO_PI};

#[derive(Debug, Error, PartialEq)]
pub enum ConveyorError {
    #[error("time {t} s outside trajectory range [0, {t_total}] s")]
    OutOfRange { t: f64, t_total: f64 },
    #[error("invalid ramp segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },
}

/// One linear detuning ramp of the conveyor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSegment {
    /// s
    pub duration: f64,
    /// Hz
    pub detuning_start: f64,
    /// Hz
    pub detuning_end: f64,
}

/// Ordered lattice-detuning ramps, linear inside each segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub segments: Vec<RampSegment>,
    /// +1 moves atoms towards and into the fiber, -1 away from it.
    pub direction: f64,
}

impl TrajectorySpec {
    /// Ramp 0 → `detuning` in `t_up`, hold for `t_hold`, ramp back to 0 in `t_down`.
    pub fn trapezoid(detuning: f64, t_up: f64, t_hold: f64, t_down: f64) -> Self {
        let segments = [
            (t_up, 0.0, detuning),
            (t_hold, detuning, detuning),
            (t_down, detuning, 0.0),
        ]
        .into_iter()
        .filter(|(d, _, _)| *d > 0.0)
        .map(|(duration, detuning_start, detuning_end)| RampSegment {
            duration,
            detuning_start,
            detuning_end,
        })
        .collect();
        Self {
            segments,
            direction: 1.0,
        }
    }

    /// The loading ramp that brings the cloud from the MOT into the fiber:
    /// 0 → 1.2 MHz in 1 ms, 14 ms hold, 1 ms back to zero.
    pub fn mot_to_fiber() -> Self {
        Self::trapezoid(1.2e6, 1e-3, 14e-3, 1e-3)
    }

    pub fn validate(&self) -> Result<(), ConveyorError> {
        if !(self.direction == 1.0 || self.direction == -1.0) {
            return Err(ConveyorError::InvalidSegment {
                index: 0,
                reason: format!("direction must be +1 or -1, got {}", self.direction),
            });
        }
        for (index, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(ConveyorError::InvalidSegment {
                    index,
                    reason: format!("duration must be positive, got {}", s.duration),
                });
            }
            if !(s.detuning_start.is_finite() && s.detuning_end.is_finite()) {
                return Err(ConveyorError::InvalidSegment {
                    index,
                    reason: "detuning must be finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// A constant-acceleration piece of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSegment {
    pub t_start: f64,
    pub duration: f64,
    pub x_start: f64,
    pub v_start: f64,
    pub accel: f64,
}

impl KinematicSegment {
    fn at(&self, tau: f64) -> (f64, f64, f64) {
        (
            self.x_start + self.v_start * tau + 0.5 * self.accel * tau * tau,
            self.v_start + self.accel * tau,
            self.accel,
        )
    }

    fn end(&self) -> (f64, f64) {
        let (x, v, _) = self.at(self.duration);
        (x, v)
    }
}

/// Piecewise-analytic conveyor motion x(t), v(t), a(t) over [0, t_total].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    segments: Vec<KinematicSegment>,
    v_initial: f64,
}

impl Trajectory {
    /// No motion at all.
    pub fn stationary() -> Self {
        Self {
            segments: Vec::new(),
            v_initial: 0.0,
        }
    }

    /// Builds a trajectory from (duration, v_start, v_end) pieces, starting at x = 0.
    pub fn from_velocity_ramps(pieces: &[(f64, f64, f64)]) -> Self {
        let mut segments = Vec::with_capacity(pieces.len());
        let (mut t, mut x) = (0.0, 0.0);
        for &(duration, v0, v1) in pieces {
            if duration <= 0.0 {
                continue;
            }
            let seg = KinematicSegment {
                t_start: t,
                duration,
                x_start: x,
                v_start: v0,
                accel: (v1 - v0) / duration,
            };
            x = seg.end().0;
            t += duration;
            segments.push(seg);
        }
        let v_initial = pieces.first().map_or(0.0, |p| p.1);
        Self { segments, v_initial }
    }

    /// Converts a detuning-ramp specification into motion for a lattice of
    /// wavelength `lambda_lattice`.
    pub fn from_spec(spec: &TrajectorySpec, lambda_lattice: f64) -> Result<Self, ConveyorError> {
        spec.validate()?;
        let pieces: Vec<_> = spec
            .segments
            .iter()
            .map(|s| {
                (
                    s.duration,
                    spec.direction * speed_from_detuning(s.detuning_start, lambda_lattice),
                    spec.direction * speed_from_detuning(s.detuning_end, lambda_lattice),
                )
            })
            .collect();
        Ok(Self::from_velocity_ramps(&pieces))
    }

    pub fn segments(&self) -> &[KinematicSegment] {
        &self.segments
    }

    pub fn t_total(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_start + s.duration)
    }

    pub fn displacement(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end().0)
    }

    pub fn final_velocity(&self) -> f64 {
        self.segments.last().map_or(self.v_initial, |s| s.end().1)
    }

    pub fn max_speed(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.v_start.abs(), s.end().1.abs()])
            .fold(0.0, f64::max)
    }

    pub fn max_abs_accel(&self) -> f64 {
        self.segments.iter().map(|s| s.accel.abs()).fold(0.0, f64::max)
    }

    /// (x, v, a) at time t. Segment boundaries take the later segment's acceleration.
    pub fn sample(&self, t: f64) -> Result<(f64, f64, f64), ConveyorError> {
        let t_total = self.t_total();
        let slack = 1e-12 * t_total.max(1e-9);
        if !(t >= -slack && t <= t_total + slack) {
            return Err(ConveyorError::OutOfRange { t, t_total });
        }
        Ok(self.sample_clamped(t))
    }

    /// Like [`sample`](Self::sample) but holds the end states outside the range.
    pub fn sample_clamped(&self, t: f64) -> (f64, f64, f64) {
        let Some(last) = self.segments.last() else {
            return (0.0, self.v_initial, 0.0);
        };
        if t <= 0.0 {
            let first = &self.segments[0];
            return (first.x_start, first.v_start, first.accel);
        }
        if t >= self.t_total() {
            let (x, v) = last.end();
            return (x, v, last.accel);
        }
        let idx = self.segments.partition_point(|s| s.t_start <= t).saturating_sub(1);
        let seg = &self.segments[idx];
        seg.at(t - seg.t_start)
    }
}

/// Lattice node speed v = Δν·λ/2 (signed as Δν).
pub fn speed_from_detuning(delta_nu: f64, lambda_lattice: f64) -> f64 {
    delta_nu * lambda_lattice / 2.0
}

/// Inverse of [`speed_from_detuning`].
pub fn detuning_from_speed(v: f64, lambda_lattice: f64) -> f64 {
    2.0 * v / lambda_lattice
}

/// Largest acceleration the lattice can impart, a_max = U0·k_L/m with k_L = 2π/λ.
pub fn max_acceleration(trap_depth: f64, lambda_lattice: f64, mass: f64) -> f64 {
    trap_depth * (TWO_PI / lambda_lattice) / mass
}

/// Trapezoidal velocity profile: 0 → v_max in `t_up`, constant for `t_hold`,
/// back to 0 in `t_down`.
pub fn plan_trapezoid(v_max: f64, t_up: f64, t_hold: f64, t_down: f64) -> Trajectory {
    Trajectory::from_velocity_ramps(&[(t_up, 0.0, v_max), (t_hold, v_max, v_max), (t_down, v_max, 0.0)])
}

/// Closed-form displacement of [`plan_trapezoid`].
pub fn trapezoid_displacement(v_max: f64, t_up: f64, t_hold: f64, t_down: f64) -> f64 {
    v_max * (t_hold + 0.5 * (t_up + t_down))
}

/// Symmetric plan covering `distance` (signed) with cruise speed `speed` and
/// ramps of `t_ramp`. Short distances become a triangle at the same acceleration.
pub fn plan_distance(distance: f64, speed: f64, t_ramp: f64) -> Trajectory {
    if distance == 0.0 || speed == 0.0 {
        return Trajectory::stationary();
    }
    let v = speed.abs() * distance.signum();
    let full = speed.abs() * t_ramp;
    if distance.abs() >= full {
        let t_hold = (distance.abs() - full) / speed.abs();
        plan_trapezoid(v, t_ramp, t_hold, t_ramp)
    } else {
        // triangle: d = v_peak * t_r with v_peak = a * t_r
        let accel = speed.abs() / t_ramp;
        let t_r = (distance.abs() / accel).sqrt();
        plan_trapezoid(accel * t_r * distance.signum(), t_r, 0.0, t_r)
    }
}

/// Symmetric plan lasting `t_total` with cruise velocity `v` (signed) and
/// ramps of `t_ramp`. If the duration is shorter than both ramps, the ramps are
/// shortened at fixed acceleration.
pub fn plan_duration(t_total: f64, v: f64, t_ramp: f64) -> Trajectory {
    if t_total <= 0.0 {
        return Trajectory::stationary();
    }
    if t_total >= 2.0 * t_ramp {
        plan_trapezoid(v, t_ramp, t_total - 2.0 * t_ramp, t_ramp)
    } else {
        let t_r = 0.5 * t_total;
        plan_trapezoid(v * t_r / t_ramp, t_r, 0.0, t_r)
    }
}

/// A segment whose acceleration exceeds the allowed limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccelViolation {
    pub segment: usize,
    pub accel: f64,
    pub limit: f64,
}

/// Flags every segment with |a| > safety·a_max. Empty means feasible.
pub fn check_feasible(traj: &Trajectory, a_max: f64, safety: f64) -> Vec<AccelViolation> {
    let limit = safety * a_max;
    traj.segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.accel.abs() > limit)
        .map(|(segment, s)| AccelViolation {
            segment,
            accel: s.accel,
            limit,
        })
        .collect()
}

/// First-order Doppler shift of a beam seen by atoms moving at `v` along the
/// beam: Δf = −v/λ. Motion away from the source (positive v) lowers the
/// apparent frequency.
pub fn doppler_single_photon(v: f64, lambda: f64) -> f64 {
    -v / lambda
}

/// Spin-wave wavelength for collinear probe and control: λ_sw = c/Δν_hf.
pub fn spin_wave_wavelength(delta_hf: f64) -> f64 {
    PHYS.c / delta_hf
}

/// Magnitude of the two-photon Doppler shift, v/λ_sw.
pub fn two_photon_doppler(v: f64, lambda_sw: f64) -> f64 {
    v / lambda_sw
}
