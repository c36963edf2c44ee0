//! Method-of-lines integrator for the weak-probe Λ system.
//!
//! Internal units: µs, mm, rad/µs. The grid is attached to the atoms, so the
//! spin wave is carried with the cloud exactly; the lab-frame position of the
//! grid origin is `FieldState::lab_offset`. Atomic motion enters through the
//! Doppler-shifted detunings and the lab-frame coupling profile.
//!
//! Equations (Rabi frequencies in rad/µs, ρ_eg = P, ρ_sg = S):
//!
//! ```text
//! ∂t P = −(Γ/2 − iΔ') P + (i/2) E + (i/2) Ω_c(t) S
//! ∂t S = −(γs − iδ') S + (i/2) Ω_c(t) P
//! ∂z E = i (Γ/2) d(z) P
//! ```
//!
//! with Δ' = Δ − k_p v, δ' = δ − (k_p − k_c) v and d(z) the optical depth per
//! unit length, normalised so that ∫d dz is the effective OD. Retardation is
//! neglected, so E is obtained by trapezoidal quadrature in z at every RK4
//! stage.
//!
//! Outside the fiber d = d₀·s with s the interface scale, which models a
//! reduced overlap of the atoms with the probe mode: the atom-probe coupling
//! amplitude is √s. P and S above are per unit coupling amplitude, so the
//! physical coherence of an atom is √s·S. When the cloud moves through the
//! interface, S is rescaled accordingly (the per-atom coherence is carried
//! along unchanged).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{advect_spin_wave, ControlSchedule, EventMarker, LambdaParams, ProbePulse, Snapshot, TimeSeries};
use crate::config::{ExperimentConfig, FiberGeometry};
use crate::constants::{per_s_to_per_us, TWO_PI};
use crate::conveyor::{spin_wave_wavelength, Trajectory};
use crate::medium::{od_scale_at, DensityProfile, OdScaleParams};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("resolution violation: {0}")]
    Resolution(String),
    #[error("non-finite field at t = {t} µs")]
    NonFinite { t: f64 },
    #[error("invalid hold: {0}")]
    InvalidHold(String),
}

/// Probe field, optical polarisation and spin coherence on the atom-frame grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    /// Atom-frame coordinate relative to the cloud center, mm.
    pub z: Vec<f64>,
    /// Lab position of z = 0, mm.
    pub lab_offset: f64,
    pub e: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub s: Vec<Complex64>,
    /// µs
    pub t: f64,
}

impl FieldState {
    pub fn dz(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    /// Spin wave seen on a lab grid that coincided with the atom grid when the
    /// cloud sat at `reference_offset` (mm).
    pub fn spin_wave_lab(&self, reference_offset: f64) -> Vec<Complex64> {
        advect_spin_wave(&self.s, self.dz(), self.lab_offset - reference_offset).s
    }

    pub fn spin_norm(&self) -> f64 {
        self.s.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dz()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .chain(&self.p)
            .chain(&self.s)
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Cloud motion: lab center = `origin` + trajectory position since `t_start`.
#[derive(Debug, Clone)]
pub struct Motion {
    /// m
    pub origin: f64,
    pub trajectory: Trajectory,
    /// s
    pub t_start: f64,
}

impl Motion {
    pub fn at_rest(origin: f64) -> Self {
        Self {
            origin,
            trajectory: Trajectory::stationary(),
            t_start: 0.0,
        }
    }

    /// (lab center in mm, velocity in mm/µs) at solver time `t_us`.
    fn at(&self, t_us: f64) -> (f64, f64) {
        let (x, v, _) = self.trajectory.sample_clamped(t_us * 1e-6 - self.t_start);
        ((self.origin + x) * 1e3, v * 1e-3)
    }

    fn is_static(&self) -> bool {
        self.trajectory.t_total() == 0.0 && self.trajectory.final_velocity() == 0.0
    }
}

pub struct Solver {
    params: LambdaParams,
    /// rad/mm
    k_probe: f64,
    /// rad/mm
    k_spin: f64,
    dz: f64,
    /// OD per mm before the interface scale.
    base: Vec<f64>,
    coupling: Vec<f64>,
    /// Interface scale at each grid point.
    overlap: Vec<f64>,
    atom_fraction: f64,
    fiber: FiberGeometry,
    scale: OdScaleParams,
    motion: Motion,
    probe: ProbePulse,
    schedule: ControlSchedule,
    dt_max: f64,
    stride: usize,
    state: FieldState,
    series: TimeSeries,
    // scratch
    dp: [Vec<Complex64>; 4],
    ds: [Vec<Complex64>; 4],
    tmp_p: Vec<Complex64>,
    tmp_s: Vec<Complex64>,
    tmp_e: Vec<Complex64>,
    tmp_d: Vec<f64>,
}

impl Solver {
    /// Sets up a run with the cloud of `cfg` moving as `motion`.
    pub fn new(
        cfg: &ExperimentConfig,
        motion: Motion,
        schedule: ControlSchedule,
        probe: ProbePulse,
    ) -> Result<Self, SolverError> {
        let num = &cfg.numerics;
        if num.points_per_width < 20.0 {
            return Err(SolverError::Resolution(format!(
                "{} grid points per cloud width, need at least 20",
                num.points_per_width
            )));
        }
        let gamma = per_s_to_per_us(cfg.species.gamma);
        let mut limit = 1.0 / gamma;
        if let Some(edge) = schedule.shortest_edge() {
            limit = limit.min(edge * 1e6);
        }
        let dt_max = limit / num.dt_divisor;
        if num.dt_divisor < 5.0 {
            return Err(SolverError::Resolution(format!(
                "dt = {dt_max:.3e} µs does not resolve min(1/Γ, control edge) = {limit:.3e} µs"
            )));
        }

        let w = cfg.cloud.width_1e * 1e3;
        let dz = w / num.points_per_width;
        let half = num.window_widths * w;
        let n = (2.0 * half / dz).ceil() as usize + 1;
        let z: Vec<f64> = (0..n).map(|j| -half + j as f64 * dz).collect();

        let profile = DensityProfile {
            atom_number: cfg.cloud.atom_number,
            center: 0.0,
            width_1e: w,
        };
        let od_per_unit = cfg.medium.od_fiber * cfg.cloud.atom_number / cfg.medium.od_reference_atoms;
        let base: Vec<f64> = z.iter().map(|&zj| od_per_unit * profile.unit(zj)).collect();

        let params = LambdaParams {
            gamma,
            delta: per_s_to_per_us(probe.detuning),
            delta2: per_s_to_per_us(cfg.control.two_photon_detuning),
            gamma_s: per_s_to_per_us(cfg.medium.spin_decoherence),
        };
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let (lab0, _) = motion.at(0.0);
        let mut solver = Self {
            params,
            k_probe: TWO_PI / (cfg.species.lambda_probe * 1e3),
            k_spin: TWO_PI / (spin_wave_wavelength(cfg.species.delta_hf) * 1e3),
            dz,
            coupling: base.clone(),
            overlap: vec![1.0; n],
            base,
            atom_fraction: 1.0,
            fiber: cfg.fiber.clone(),
            scale: cfg.medium.od_scale,
            motion,
            probe,
            schedule,
            dt_max,
            stride: num.output_stride,
            state: FieldState {
                z,
                lab_offset: lab0,
                e: zero.clone(),
                p: zero.clone(),
                s: zero.clone(),
                t: 0.0,
            },
            series: TimeSeries {
                power_unit: {
                    let a = per_s_to_per_us(probe.rabi_peak);
                    if a > 0.0 {
                        a * a
                    } else {
                        1.0
                    }
                },
                ..TimeSeries::default()
            },
            dp: std::array::from_fn(|_| zero.clone()),
            ds: std::array::from_fn(|_| zero.clone()),
            tmp_p: zero.clone(),
            tmp_s: zero.clone(),
            tmp_e: zero,
            tmp_d: vec![0.0; n],
        };
        solver.update_coupling(0.0);
        let mut e = std::mem::take(&mut solver.state.e);
        let p = solver.state.p.clone();
        let d = solver.coupling.clone();
        solver.field_from_polarisation(0.0, &p, &d, &mut e);
        solver.state.e = e;
        solver.record();
        solver
            .series
            .events
            .extend(solver.schedule.events().iter().map(|ev| EventMarker {
                name: ev.name.clone(),
                t: ev.t * 1e6,
            }));
        Ok(solver)
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_series(self) -> TimeSeries {
        self.series
    }

    /// Current OD per mm on the grid.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn params(&self) -> &LambdaParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt_max
    }

    /// Control Rabi frequency in rad/µs at solver time `t_us`.
    pub fn control_at(&self, t_us: f64) -> f64 {
        per_s_to_per_us(self.schedule.at(t_us * 1e-6))
    }

    pub fn add_event(&mut self, name: &str, t_us: f64) {
        self.series.events.push(EventMarker::new(name, t_us));
    }

    pub fn snapshot(&mut self, name: &str) {
        let snap = Snapshot {
            name: name.to_string(),
            state: self.state.clone(),
            coupling: self.coupling.clone(),
            gamma: self.params.gamma,
            omega_c: self.control_at(self.state.t),
        };
        self.series.snapshots.push(snap);
    }

    /// Multiplies the stored spin wave by a real amplitude factor.
    pub fn scale_spin_wave(&mut self, factor: f64) {
        self.state.s.iter_mut().for_each(|c| *c *= factor);
    }

    /// Scales the atom number (and with it the coupling) by `fraction`.
    pub fn set_atom_fraction(&mut self, fraction: f64) {
        self.atom_fraction = fraction;
        self.update_coupling(self.state.t);
    }

    fn input(&self, t_us: f64) -> Complex64 {
        Complex64::new(per_s_to_per_us(self.probe.envelope(t_us * 1e-6)), 0.0)
    }

    /// Recomputes the coupling at the cloud position for `t_us`. Where the
    /// interface scale changes, P and S are rescaled so that the physical
    /// coherence √s·S carried by each atom is unchanged.
    fn update_coupling(&mut self, t_us: f64) {
        let (lab, _) = self.motion.at(t_us);
        let (fiber, scale, frac) = (&self.fiber, &self.scale, self.atom_fraction);
        for j in 0..self.coupling.len() {
            let s_new = od_scale_at((self.state.z[j] + lab) * 1e-3, fiber, scale);
            let s_old = self.overlap[j];
            if s_new != s_old {
                let f = (s_old / s_new).sqrt();
                self.state.p[j] *= f;
                self.state.s[j] *= f;
                self.overlap[j] = s_new;
            }
            self.coupling[j] = frac * self.base[j] * s_new;
        }
    }

    fn coupling_at(&self, t_us: f64, out: &mut [f64]) {
        let (lab, _) = self.motion.at(t_us);
        for ((d, b), z) in out.iter_mut().zip(&self.base).zip(&self.state.z) {
            *d = self.atom_fraction * b * od_scale_at((z + lab) * 1e-3, &self.fiber, &self.scale);
        }
    }

    fn field_from_polarisation(&self, t_us: f64, p: &[Complex64], d: &[f64], e: &mut [Complex64]) {
        let k = Complex64::new(0.0, 0.25 * self.params.gamma * self.dz);
        e[0] = self.input(t_us);
        for j in 1..e.len() {
            e[j] = e[j - 1] + k * (d[j - 1] * p[j - 1] + d[j] * p[j]);
        }
    }

    /// Right-hand side at time `t_us`; writes E into `e`.
    #[allow(clippy::too_many_arguments)]
    fn rhs(
        &self,
        t_us: f64,
        p: &[Complex64],
        s: &[Complex64],
        d: &[f64],
        e: &mut [Complex64],
        dp: &mut [Complex64],
        ds: &mut [Complex64],
    ) {
        self.field_from_polarisation(t_us, p, d, e);
        let (_, v) = self.motion.at(t_us);
        let delta = self.params.delta - self.k_probe * v;
        let delta2 = self.params.delta2 - self.k_spin * v;
        let decay_p = Complex64::new(-0.5 * self.params.gamma, delta);
        let decay_s = Complex64::new(-self.params.gamma_s, delta2);
        let half_i = Complex64::new(0.0, 0.5);
        let oc = self.control_at(t_us);
        for j in 0..p.len() {
            dp[j] = decay_p * p[j] + half_i * (e[j] + oc * s[j]);
            ds[j] = decay_s * s[j] + half_i * oc * p[j];
        }
    }

    /// One RK4 step of length `h` ending exactly at `t_next`.
    fn step(&mut self, h: f64, t_next: f64) {
        let t = self.state.t;
        let moving = !self.motion.is_static();
        let n = self.state.p.len();
        let mut d = std::mem::take(&mut self.tmp_d);
        let mut e = std::mem::take(&mut self.tmp_e);
        let mut tp = std::mem::take(&mut self.tmp_p);
        let mut ts = std::mem::take(&mut self.tmp_s);
        let mut dp = std::mem::take(&mut self.dp);
        let mut ds = std::mem::take(&mut self.ds);

        let stage_t = [t, t + 0.5 * h, t + 0.5 * h, t_next];
        let stage_w = [0.0, 0.5 * h, 0.5 * h, h];
        for k in 0..4 {
            if k == 0 {
                tp.copy_from_slice(&self.state.p);
                ts.copy_from_slice(&self.state.s);
            } else {
                let w = stage_w[k];
                for j in 0..n {
                    tp[j] = self.state.p[j] + w * dp[k - 1][j];
                    ts[j] = self.state.s[j] + w * ds[k - 1][j];
                }
            }
            if moving {
                self.coupling_at(stage_t[k], &mut d);
            } else {
                d.copy_from_slice(&self.coupling);
            }
            let (dpk, dsk) = (&mut dp[k], &mut ds[k]);
            self.rhs(stage_t[k], &tp, &ts, &d, &mut e, dpk, dsk);
        }
        let c = h / 6.0;
        for j in 0..n {
            self.state.p[j] += c * (dp[0][j] + 2.0 * dp[1][j] + 2.0 * dp[2][j] + dp[3][j]);
            self.state.s[j] += c * (ds[0][j] + 2.0 * ds[1][j] + 2.0 * ds[2][j] + ds[3][j]);
        }
        self.state.t = t_next;
        if moving {
            self.update_coupling(self.state.t);
            self.state.lab_offset = self.motion.at(self.state.t).0;
        }
        let mut out = std::mem::take(&mut self.state.e);
        self.field_from_polarisation(self.state.t, &self.state.p, &self.coupling, &mut out);
        self.state.e = out;

        self.tmp_d = d;
        self.tmp_e = e;
        self.tmp_p = tp;
        self.tmp_s = ts;
        self.dp = dp;
        self.ds = ds;
    }

    fn record(&mut self) {
        let out = *self.state.e.last().expect("non-empty grid");
        self.series.push(self.state.t, out);
    }

    /// Integrates up to `t_end` (µs) with equal steps no longer than the
    /// configured dt.
    pub fn run_until(&mut self, t_end: f64) -> Result<(), SolverError> {
        let span = t_end - self.state.t;
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / self.dt_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let t0 = self.state.t;
        for i in 1..=steps {
            // t0 + i·h avoids drift from repeated addition
            self.step(h, t0 + i as f64 * h);
            let last = self.state.e[self.state.e.len() - 1];
            if !(last.re.is_finite() && last.im.is_finite()) || (i % 64 == 0 && !self.state.is_finite()) {
                return Err(SolverError::NonFinite { t: self.state.t });
            }
            if i % self.stride == 0 || i == steps {
                self.record();
            }
        }
        if !self.state.is_finite() {
            return Err(SolverError::NonFinite { t: self.state.t });
        }
        Ok(())
    }

    /// Skips `duration` µs during which the control is off and no probe light
    /// arrives. The coherences then evolve in closed form and the cloud moves
    /// by the motion's displacement.
    pub fn hold(&mut self, duration: f64) -> Result<(), SolverError> {
        if duration < 0.0 {
            return Err(SolverError::InvalidHold(format!("negative duration {duration}")));
        }
        if duration == 0.0 {
            return Ok(());
        }
        let (t0, t1) = (self.state.t, self.state.t + duration);
        if self.schedule.max_over(t0 * 1e-6, t1 * 1e-6) > 0.0 {
            return Err(SolverError::InvalidHold("control field is on during the hold".into()));
        }
        let peak = self.probe.rabi_peak;
        let probe_center = self.probe.center * 1e6;
        let leak = |t: f64| self.probe.envelope(t * 1e-6) > 1e-9 * peak;
        if peak > 0.0 && (leak(t0) || leak(t1) || (probe_center > t0 && probe_center < t1)) {
            return Err(SolverError::InvalidHold("probe light arrives during the hold".into()));
        }
        let (x0, _) = self.motion.at(t0);
        let (x1, _) = self.motion.at(t1);
        let disp = x1 - x0;
        let ps = &self.params;
        let fs = Complex64::new(-ps.gamma_s * duration, ps.delta2 * duration - self.k_spin * disp).exp();
        let fp = Complex64::new(-0.5 * ps.gamma * duration, ps.delta * duration - self.k_probe * disp).exp();
        self.state.s.iter_mut().for_each(|c| *c *= fs);
        self.state.p.iter_mut().for_each(|c| *c *= fp);
        self.state.t = t1;
        self.state.lab_offset = x1;
        self.update_coupling(t1);
        let mut out = std::mem::take(&mut self.state.e);
        self.field_from_polarisation(t1, &self.state.p, &self.coupling, &mut out);
        self.state.e = out;
        self.record();
        Ok(())
    }
}

/// Full time-domain run of `cfg` from t = 0 until the schedule and probe are
/// over plus the retrieval window. `traj` moves the cloud from t = 0.
pub fn simulate(
    cfg: &ExperimentConfig,
    traj: Option<&Trajectory>,
    schedule: &ControlSchedule,
    probe: &ProbePulse,
) -> Result<TimeSeries, SolverError> {
    let motion = match traj {
        Some(t) => Motion {
            origin: cfg.cloud.center,
            trajectory: t.clone(),
            t_start: 0.0,
        },
        None => Motion::at_rest(cfg.cloud.center),
    };
    let mut solver = Solver::new(cfg, motion, schedule.clone(), *probe)?;
    let t_end = schedule.last_knot().max(probe.end_time(1e-8)) + cfg.control.retrieval_window;
    solver.run_until(t_end * 1e6)?;
    Ok(solver.into_series())
}
