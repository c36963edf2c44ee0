//! Physical constants and the internal unit system.
//!
//! The solver works in microseconds, millimetres and rad/µs so that grid
//! quantities stay of order one. Conversions happen at the config and output
//! boundaries only.

use std::f64::consts::PI;

/// CODATA 2018 exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Speed of light, m/s.
    pub c: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

pub const PHYS: PhysConstants = PhysConstants {
    c: 299_792_458.0,
    k_b: 1.380_649e-23,
};

/// Speed of light in mm/µs.
pub const C_MM_PER_US: f64 = 299_792.458;

pub const TWO_PI: f64 = 2.0 * PI;

/// Kelvin to joules via k_B.
pub fn kelvin_to_joule(t: f64) -> f64 {
    t * PHYS.k_b
}

pub fn joule_to_kelvin(e: f64) -> f64 {
    e / PHYS.k_b
}

/// m/s -> mm/µs.
pub fn mps_to_mm_per_us(v: f64) -> f64 {
    v * 1e-3
}

/// Angular rate in rad/s -> rad/µs.
pub fn per_s_to_per_us(rate: f64) -> f64 {
    rate * 1e-6
}

/// Ordinary frequency in Hz -> angular rate in rad/µs.
pub fn hz_to_rad_per_us(f: f64) -> f64 {
    TWO_PI * f * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kelvin_joule_round_trip() {
        for t in [1e-9, 740e-6, 190e-6, 1.0, 300.0] {
            let back = joule_to_kelvin(kelvin_to_joule(t));
            assert!(((back - t) / t).abs() < 1e-12);
        }
    }

    #[test]
    fn light_speed_units_agree() {
        assert!((mps_to_mm_per_us(PHYS.c) - C_MM_PER_US).abs() < 1e-9);
    }
}
