//! Atomic-medium description: axial density, position-dependent optical depth
//! across the free-space/fiber interface, and parametric decoherence.

use serde::{Deserialize, Serialize};

use crate::config::{CloudState, FiberGeometry};

/// Divergence model for the coupling outside the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdScaleParams {
    /// Rayleigh-like length over which the coupling halves outside the tip, m.
    pub x_r: f64,
    /// Lower bound on the scale far from the fiber.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumModel {
    /// Effective OD of the reference cloud when fully inside the fiber.
    pub od_fiber: f64,
    /// Atom number at which `od_fiber` holds; OD scales linearly with N.
    pub od_reference_atoms: f64,
    /// Scattering-limited 1/e lifetime of the stored efficiency, s.
    pub tau_storage: f64,
    /// Efficiency retained per accelerate/decelerate pair.
    pub ramp_penalty_eps: f64,
    pub od_scale: OdScaleParams,
    /// Atom loss rate during transport, 1/s.
    pub loss_rate: f64,
    /// Ground-state decoherence rate γs seen by the solver, rad/s.
    pub spin_decoherence: f64,
}

impl Default for MediumModel {
    fn default() -> Self {
        Self {
            od_fiber: 5.0,
            od_reference_atoms: 1.2e5,
            tau_storage: 3.1e-3,
            ramp_penalty_eps: 0.75,
            od_scale: OdScaleParams {
                x_r: 1.0e-3,
                floor: 0.02,
            },
            loss_rate: 0.0,
            spin_decoherence: 0.0,
        }
    }
}

/// Gaussian axial density n(z) = N/(√π w)·exp(−((z − z_c)/w)²) with w the 1/e half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityProfile {
    pub atom_number: f64,
    pub center: f64,
    pub width_1e: f64,
}

impl DensityProfile {
    pub fn from_cloud(cloud: &CloudState) -> Self {
        Self {
            atom_number: cloud.atom_number,
            center: cloud.center,
            width_1e: cloud.width_1e,
        }
    }

    /// Density normalised to unit integral.
    pub fn unit(&self, z: f64) -> f64 {
        let u = (z - self.center) / self.width_1e;
        (-u * u).exp() / (std::f64::consts::PI.sqrt() * self.width_1e)
    }

    /// Atoms per metre.
    pub fn density(&self, z: f64) -> f64 {
        self.atom_number * self.unit(z)
    }
}

/// Relative coupling at axial position `x`: 1 inside the fiber, and
/// 1/(1 + (d/x_R)²) at distance d outside it, never below the floor.
pub fn od_scale_at(x: f64, fiber: &FiberGeometry, params: &OdScaleParams) -> f64 {
    let start = fiber.tip_position;
    let end = fiber.tip_position + fiber.length;
    let d = if x < start {
        start - x
    } else if x > end {
        x - end
    } else {
        return 1.0;
    };
    let r = d / params.x_r;
    (1.0 / (1.0 + r * r)).max(params.floor)
}

/// OD = od_fiber·(N/N_ref)·∫ n̂(z)·scale(z) dz.
pub fn effective_od(cloud: &CloudState, medium: &MediumModel, fiber: &FiberGeometry) -> f64 {
    if cloud.atom_number == 0.0 || medium.od_fiber == 0.0 {
        return 0.0;
    }
    let profile = DensityProfile::from_cloud(cloud);
    let lo = cloud.center - 9.0 * cloud.width_1e;
    let hi = cloud.center + 9.0 * cloud.width_1e;
    // split at the kinks of the scale function
    let mut cuts = vec![lo];
    for k in [fiber.tip_position, fiber.tip_position + fiber.length] {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    let f = |z: f64| profile.unit(z) * od_scale_at(z, fiber, &medium.od_scale);
    let overlap: f64 = cuts.windows(2).map(|w| simpson(f, w[0], w[1], 2000)).sum();
    medium.od_fiber * cloud.atom_number / medium.od_reference_atoms * overlap
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Fraction of stored efficiency left after time `t` for lifetime `tau`.
pub fn storage_decay_factor(t: f64, tau: f64) -> f64 {
    (-t / tau).exp()
}

/// Efficiency factor after `n_ramp_pairs` accelerate/decelerate pairs.
pub fn ramp_penalty(n_ramp_pairs: u32, eps: f64) -> f64 {
    eps.powi(n_ramp_pairs as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fiber() -> FiberGeometry {
        FiberGeometry {
            tip_position: 0.0,
            length: 0.1,
            mode_field_diameter: 42e-6,
            mot_distance: 6.3e-3,
        }
    }

    fn cloud(center: f64) -> CloudState {
        CloudState {
            atom_number: 1.2e5,
            center,
            width_1e: 0.6e-3,
            temperature_radial: 190e-6,
        }
    }

    /// Brute-force midpoint sum on a very fine uniform grid.
    fn od_oracle(c: &CloudState, m: &MediumModel, f: &FiberGeometry) -> f64 {
        let n = 400_000;
        let (lo, hi) = (c.center - 10.0 * c.width_1e, c.center + 10.0 * c.width_1e);
        let h = (hi - lo) / n as f64;
        let p = DensityProfile::from_cloud(c);
        let s: f64 = (0..n)
            .map(|i| {
                let z = lo + (i as f64 + 0.5) * h;
                p.unit(z) * od_scale_at(z, f, &m.od_scale)
            })
            .sum();
        m.od_fiber * c.atom_number / m.od_reference_atoms * s * h
    }

    #[test]
    fn scale_examples() {
        let m = MediumModel::default();
        assert_eq!(od_scale_at(0.05, &fiber(), &m.od_scale), 1.0);
        let p = OdScaleParams { x_r: 1e-3, floor: 0.01 };
        assert!((od_scale_at(-1e-3, &fiber(), &p) - 0.5).abs() < 1e-12);
        assert_eq!(od_scale_at(-10.0, &fiber(), &p), 0.01);
        assert!((od_scale_at(-1e-15, &fiber(), &p) - 1.0).abs() < 1e-9);
        assert!((od_scale_at(0.1 + 1e-3, &fiber(), &p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn od_examples() {
        let m = MediumModel::default();
        let deep = effective_od(&cloud(20e-3), &m, &fiber());
        assert!((deep - 5.0).abs() < 1e-9, "{deep}");
        let mut empty = cloud(20e-3);
        empty.atom_number = 0.0;
        assert_eq!(effective_od(&empty, &m, &fiber()), 0.0);
        for center in [-1e-3, 0.0, 1e-3, -3e-3] {
            let c = cloud(center);
            let od = effective_od(&c, &m, &fiber());
            let oracle = od_oracle(&c, &m, &fiber());
            assert!(((od - oracle) / oracle).abs() < 1e-6, "{center}: {od} vs {oracle}");
        }
    }

    #[test]
    fn density_normalisation() {
        let p = DensityProfile::from_cloud(&cloud(1e-3));
        let total = simpson(|z| p.density(z), -10e-3, 12e-3, 20_000);
        assert!(((total - 1.2e5) / 1.2e5).abs() < 1e-6);
    }

    #[test]
    fn decay_and_penalty_examples() {
        let eta = 0.11 * storage_decay_factor(3e-3, 3.1e-3);
        assert!((eta - 0.042).abs() < 0.001);
        assert_eq!(storage_decay_factor(0.0, 3.1e-3), 1.0);
        assert!((storage_decay_factor(2e-3, 2e-3) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((ramp_penalty(1, 0.75) * eta - 0.0315).abs() < 0.001);
        assert_eq!(ramp_penalty(0, 0.3), 1.0);
        assert_eq!(ramp_penalty(7, 1.0), 1.0);
    }

    proptest! {
        #[test]
        fn od_monotone_moving_outwards(c0 in -4e-3f64..6e-3, step in 1e-5f64..1e-3) {
            let m = MediumModel::default();
            let inner = effective_od(&cloud(c0), &m, &fiber());
            let outer = effective_od(&cloud(c0 - step), &m, &fiber());
            prop_assert!(outer <= inner + 1e-12);
        }

        #[test]
        fn od_linear_in_atom_number(n in 0.0f64..1e6, c0 in -3e-3f64..3e-3) {
            let m = MediumModel::default();
            let mut c = cloud(c0);
            let base = effective_od(&c, &m, &fiber());
            c.atom_number = n;
            let od = effective_od(&c, &m, &fiber());
            prop_assert!((od - base * n / 1.2e5).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn decay_semigroup(t1 in 0.0f64..1e-2, t2 in 0.0f64..1e-2, tau in 1e-4f64..1e-2) {
            let lhs = storage_decay_factor(t1 + t2, tau);
            let rhs = storage_decay_factor(t1, tau) * storage_decay_factor(t2, tau);
            // exp(−x) inherits the rounding of its argument: relative error ~ (1 + x)·ε
            let x = (t1 + t2) / tau;
            prop_assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON * (1.0 + x) * lhs);
        }

        #[test]
        fn scale_continuous_at_tip(x_r in 1e-5f64..1e-2) {
            let p = OdScaleParams { x_r, floor: 0.0 };
            let jump = (od_scale_at(-1e-13, &fiber(), &p) - od_scale_at(0.0, &fiber(), &p)).abs();
            prop_assert!(jump < 1e-9);
        }
    }
}
