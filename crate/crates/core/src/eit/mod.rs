//! Weak-probe Maxwell–Bloch dynamics of a Λ-type medium on a 1D axial grid.

mod advect;
mod schedule;
mod series;
mod solver;
mod susceptibility;

use serde::{Deserialize, Serialize};

pub use advect::{advect_spin_wave, Advected};
pub use schedule::{ControlSchedule, EventMarker};
pub use series::{output_pulse_energy, SeriesError, Snapshot, TimeSeries};
pub use solver::{simulate, FieldState, Motion, Solver, SolverError};
pub use susceptibility::{steady_state_transmission, LambdaParams};

/// Gaussian probe pulse. Power FWHM is `fwhm`; the envelope is real at the
/// carrier detuning `detuning`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulse {
    /// Peak Rabi frequency Ω_p0, rad/s.
    pub rabi_peak: f64,
    /// Center time t₀, s.
    pub center: f64,
    /// Intensity FWHM, s.
    pub fwhm: f64,
    /// One-photon detuning Δ of the carrier, rad/s.
    pub detuning: f64,
}

impl ProbePulse {
    /// Envelope Ω_p(t) in rad/s at time `t` (s).
    pub fn envelope(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.fwhm;
        self.rabi_peak * (-2.0 * std::f64::consts::LN_2 * u * u).exp()
    }

    /// Weak-probe validity: Ω_p0 at most a tenth of both Ω_c and Γ.
    pub fn is_weak(&self, omega_c: f64, gamma: f64) -> bool {
        self.rabi_peak <= 0.1 * gamma && (omega_c == 0.0 || self.rabi_peak <= 0.1 * omega_c)
    }

    /// Time after which the input is below `rel` of its peak amplitude.
    pub fn end_time(&self, rel: f64) -> f64 {
        self.center + self.fwhm * (-rel.ln() / (2.0 * std::f64::consts::LN_2)).sqrt()
    }

    /// ∫|Ω_p/Ω_p0|² dt in s.
    pub fn normalised_energy(&self) -> f64 {
        (std::f64::consts::PI / (4.0 * std::f64::consts::LN_2)).sqrt() * self.fwhm
    }
}
