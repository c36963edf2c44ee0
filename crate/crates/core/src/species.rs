//! Atomic species data.

use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;

/// A single effective Λ system on one atomic species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Excited-state decay rate Γ, rad/s.
    pub gamma: f64,
    /// Probe transition wavelength, m.
    pub lambda_probe: f64,
    /// Ground-state hyperfine splitting, Hz.
    pub delta_hf: f64,
    /// Saturation intensity used for power to Rabi conversion, W/m².
    pub saturation_intensity: f64,
}

impl AtomSpecies {
    /// ⁸⁷Rb on the D2 line. Reference values (Steck, "Rubidium 87 D Line Data").
    pub fn rb87() -> Self {
        Self {
            name: "Rb87".to_string(),
            mass: 1.443_16e-25,
            gamma: TWO_PI * 6.065e6,
            lambda_probe: 780.24e-9,
            delta_hf: 6.834_683e9,
            // isotropic-polarization value, 3.577 mW/cm²
            saturation_intensity: 35.77,
        }
    }

    /// Looks up a built-in species by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "Rb87" | "rb87" | "87Rb" => Some(Self::rb87()),
            _ => None,
        }
    }

    /// Peak Rabi frequency (rad/s) of a beam with the given power in a Gaussian
    /// mode of the given mode-field diameter, using Ω = Γ·sqrt(I / 2 I_sat).
    pub fn rabi_from_power(&self, power_w: f64, mode_field_diameter: f64) -> f64 {
        let w = mode_field_diameter / 2.0;
        let peak_intensity = 2.0 * power_w / (std::f64::consts::PI * w * w);
        self.gamma * (peak_intensity / (2.0 * self.saturation_intensity)).sqrt()
    }
}
