//! Weak-probe Λ-system linear response.
//!
//! Conventions, shared with the time-domain solver: Rabi frequencies are full
//! Rabi frequencies (the Hamiltonian couples with Ω/2), detunings are laser
//! minus atom, and a field component at offset ω from the carrier varies as
//! e^{−iωt}. With these, the amplitude transfer through a medium of optical
//! depth OD is H(ω) = exp(−OD·Γ·X(ω)/4) with
//!
//! X(ω) = (γs − i(δ+ω)) / [(Γ/2 − i(Δ+ω))(γs − i(δ+ω)) + Ω_c²/4],
//!
//! which reduces to X = 2/Γ for a resonant two-level medium, so the intensity
//! transmission is e^{−OD}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Detunings and rates of the Λ system, all in the same angular unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    /// Excited-state decay rate Γ.
    pub gamma: f64,
    /// One-photon detuning Δ.
    pub delta: f64,
    /// Two-photon detuning δ.
    pub delta2: f64,
    /// Ground-state decoherence γs.
    pub gamma_s: f64,
}

impl LambdaParams {
    pub fn resonant(gamma: f64) -> Self {
        Self {
            gamma,
            delta: 0.0,
            delta2: 0.0,
            gamma_s: 0.0,
        }
    }

    /// X(ω) as defined in the module docs.
    pub fn response(&self, omega_c: f64, omega: f64) -> Complex64 {
        let i = Complex64::i();
        let spin = self.gamma_s - i * (self.delta2 + omega);
        let optical = 0.5 * self.gamma - i * (self.delta + omega);
        if omega_c == 0.0 {
            // two-level limit, also when the spin factor vanishes
            return 1.0 / optical;
        }
        spin / (optical * spin + 0.25 * omega_c * omega_c)
    }

    /// Unit-normalised susceptibility χ̂ = iΓX/2; Im χ̂ = 1 for a resonant two-level atom.
    pub fn chi_hat(&self, omega_c: f64, omega: f64) -> Complex64 {
        Complex64::i() * 0.5 * self.gamma * self.response(omega_c, omega)
    }

    /// Amplitude transfer function through optical depth `od`.
    pub fn transfer(&self, od: f64, omega_c: f64, omega: f64) -> Complex64 {
        // −OD·Γ·X/4 = −OD·χ̂/(2i) = i·OD·χ̂/2
        (Complex64::i() * 0.5 * od * self.chi_hat(omega_c, omega)).exp()
    }
}

/// Steady-state intensity transmission T = exp(−OD·Im χ̂) at the carrier.
pub fn steady_state_transmission(od: f64, params: &LambdaParams, omega_c: f64) -> f64 {
    (-od * params.chi_hat(omega_c, 0.0).im).exp()
}
