//! Dark- and bright-state polariton views of solver field states.
//!
//! With the solver conventions (µs, mm, rad/µs) the normalised fields are
//! Ê = E/√c and Ŝ = √(d(z)Γ)·S, where d is the OD per mm. The collective
//! coupling is G = √(dΓc) and tan θ = G/Ω_c. With these, the adiabatic dark
//! state S = −E/Ω_c has Φ = 0, and c·cos²θ matches the group delay of the
//! linear-response transfer function. The views are read-only diagnostics.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{C_MM_PER_US, PHYS};
use crate::eit::{FieldState, Snapshot};

#[derive(Debug, Error, PartialEq)]
pub enum PolaritonError {
    #[error("mixing angle undefined for G = 0 and Ω_c = 0")]
    UndefinedAngle,
    #[error("negative coupling: G = {g}, Ω_c = {omega_c}")]
    Negative { g: f64, omega_c: f64 },
    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),
}

/// θ = atan2(G, Ω_c) ∈ [0, π/2].
pub fn mixing_angle(g: f64, omega_c: f64) -> Result<f64, PolaritonError> {
    if g < 0.0 || omega_c < 0.0 {
        return Err(PolaritonError::Negative { g, omega_c });
    }
    if g == 0.0 && omega_c == 0.0 {
        return Err(PolaritonError::UndefinedAngle);
    }
    Ok(g.atan2(omega_c))
}

/// v_g = c·cos²θ, m/s.
pub fn group_velocity(theta: f64) -> f64 {
    PHYS.c * theta.cos().powi(2)
}

/// G = √(dΓc) in rad/µs for OD per mm `d` and Γ in rad/µs.
pub fn collective_coupling(d_per_mm: f64, gamma: f64) -> f64 {
    (d_per_mm * gamma * C_MM_PER_US).sqrt()
}

fn check_len(a: usize, b: usize) -> Result<(), PolaritonError> {
    if a == b {
        Ok(())
    } else {
        Err(PolaritonError::GridMismatch(a, b))
    }
}

/// `theta` holds one angle per grid point, or a single angle for all.
fn angle(theta: &[f64], j: usize) -> f64 {
    if theta.len() == 1 {
        theta[0]
    } else {
        theta[j]
    }
}

fn rotate(
    a: &[Complex64],
    b: &[Complex64],
    theta: &[f64],
    sign: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), PolaritonError> {
    check_len(a.len(), b.len())?;
    if theta.len() != 1 {
        check_len(a.len(), theta.len())?;
    }
    Ok(a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (&x, &y))| {
            let (s, c) = angle(theta, j).sin_cos();
            (c * x - sign * s * y, sign * s * x + c * y)
        })
        .unzip())
}

/// (Ψ, Φ) = (cosθ·Ê − sinθ·Ŝ, sinθ·Ê + cosθ·Ŝ).
pub fn dark_bright_transform(
    e_hat: &[Complex64],
    s_hat: &[Complex64],
    theta: &[f64],
) -> Result<(Vec<Complex64>, Vec<Complex64>), PolaritonError> {
    rotate(e_hat, s_hat, theta, 1.0)
}

/// Inverse of [`dark_bright_transform`]: (Ê, Ŝ) from (Ψ, Φ).
pub fn inverse_dark_bright_transform(
    psi: &[Complex64],
    phi: &[Complex64],
    theta: &[f64],
) -> Result<(Vec<Complex64>, Vec<Complex64>), PolaritonError> {
    rotate(psi, phi, theta, -1.0)
}

/// (Ê, Ŝ) for a solver state with OD-per-mm profile `coupling`.
pub fn normalised_fields(
    state: &FieldState,
    coupling: &[f64],
    gamma: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), PolaritonError> {
    check_len(state.e.len(), coupling.len())?;
    let inv_sqrt_c = 1.0 / C_MM_PER_US.sqrt();
    let e_hat = state.e.iter().map(|&e| e * inv_sqrt_c).collect();
    let s_hat = state
        .s
        .iter()
        .zip(coupling)
        .map(|(&s, &d)| s * (d * gamma).sqrt())
        .collect();
    Ok((e_hat, s_hat))
}

/// ∫|f|² dz by the rectangle rule.
pub fn norm(f: &[Complex64], dz: f64) -> f64 {
    f.iter().map(|c| c.norm_sqr()).sum::<f64>() * dz
}

/// Polariton decomposition of one field state. θ and v_g vary along z with
/// the local coupling.
#[derive(Debug, Clone, Serialize)]
pub struct PolaritonView {
    /// mm, atom frame
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    /// m/s
    pub v_g: Vec<f64>,
    pub e_hat: Vec<Complex64>,
    pub s_hat: Vec<Complex64>,
}

impl PolaritonView {
    /// `coupling` in OD per mm, `gamma` and `omega_c` in rad/µs.
    pub fn from_state(state: &FieldState, coupling: &[f64], gamma: f64, omega_c: f64) -> Result<Self, PolaritonError> {
        let (e_hat, s_hat) = normalised_fields(state, coupling, gamma)?;
        let theta = coupling
            .iter()
            .map(|&d| mixing_angle(collective_coupling(d, gamma), omega_c))
            .collect::<Result<Vec<_>, _>>()?;
        let (psi, phi) = dark_bright_transform(&e_hat, &s_hat, &theta)?;
        Ok(Self {
            z: state.z.clone(),
            v_g: theta.iter().map(|&t| group_velocity(t)).collect(),
            theta,
            psi,
            phi,
            e_hat,
            s_hat,
        })
    }

    pub fn from_snapshot(snap: &Snapshot) -> Result<Self, PolaritonError> {
        Self::from_state(&snap.state, &snap.coupling, snap.gamma, snap.omega_c)
    }

    fn dz(&self) -> f64 {
        if self.z.len() > 1 {
            self.z[1] - self.z[0]
        } else {
            0.0
        }
    }

    pub fn dark_norm(&self) -> f64 {
        norm(&self.psi, self.dz())
    }

    pub fn bright_norm(&self) -> f64 {
        norm(&self.phi, self.dz())
    }

    pub fn spin_norm(&self) -> f64 {
        norm(&self.s_hat, self.dz())
    }

    pub fn photon_norm(&self) -> f64 {
        norm(&self.e_hat, self.dz())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_mm,theta_rad,psi_abs2,phi_abs2,e_hat_abs2,s_hat_abs2,v_g_mps\n");
        for j in 0..self.z.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.z[j],
                self.theta[j],
                self.psi[j].norm_sqr(),
                self.phi[j].norm_sqr(),
                self.e_hat[j].norm_sqr(),
                self.s_hat[j].norm_sqr(),
                self.v_g[j]
            ));
        }
        out
    }
}
