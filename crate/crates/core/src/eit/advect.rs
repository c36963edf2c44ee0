//! Rigid translation of a spin-wave grid.

use num_complex::Complex64;

/// Result of [`advect_spin_wave`].
#[derive(Debug, Clone)]
pub struct Advected {
    pub s: Vec<Complex64>,
    /// Fraction of Σ|S|² that left the window.
    pub clipped_fraction: f64,
}

/// S(z) ← S(z − displacement) on a uniform grid with spacing `dz`, using cubic
/// Catmull-Rom interpolation. Values entering from outside the window are zero.
pub fn advect_spin_wave(s: &[Complex64], dz: f64, displacement: f64) -> Advected {
    let n = s.len();
    if displacement == 0.0 || n == 0 {
        return Advected {
            s: s.to_vec(),
            clipped_fraction: 0.0,
        };
    }
    let zero = Complex64::new(0.0, 0.0);
    let get = |i: isize| -> Complex64 {
        if i < 0 || i >= n as isize {
            zero
        } else {
            s[i as usize]
        }
    };
    let shift = displacement / dz;
    let out: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = j as f64 - shift;
            let i = x.floor();
            let f = x - i;
            let i = i as isize;
            let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
            let f2 = f * f;
            let f3 = f2 * f;
            0.5 * (p1 * 2.0
                + (p2 - p0) * f
                + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * f2
                + (p3 - p0 + (p1 - p2) * 3.0) * f3)
        })
        .collect();

    // the part of the old support that lands outside the window
    let total: f64 = s.iter().map(|c| c.norm_sqr()).sum();
    let kept: f64 = (0..n)
        .filter(|&i| {
            let dest = i as f64 + shift;
            dest >= 0.0 && dest <= (n - 1) as f64
        })
        .map(|i| s[i].norm_sqr())
        .sum();
    let clipped_fraction = if total > 0.0 { 1.0 - kept / total } else { 0.0 };
    Advected {
        s: out,
        clipped_fraction: clipped_fraction.max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, dz: f64, center: f64, w: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let z = i as f64 * dz;
                let u = (z - center) / w;
                Complex64::new((-u * u).exp(), 0.3 * (-u * u).exp())
            })
            .collect()
    }

    fn norm(s: &[Complex64]) -> f64 {
        s.iter().map(|c| c.norm_sqr()).sum()
    }

    #[test]
    fn zero_shift_is_identity() {
        let s = gaussian(200, 0.024, 2.0, 0.6);
        assert_eq!(advect_spin_wave(&s, 0.024, 0.0).s, s);
    }

    #[test]
    fn shifted_gaussian_matches_analytic() {
        let dz = 0.024;
        let s = gaussian(400, dz, 2.5, 0.6);
        let out = advect_spin_wave(&s, dz, 1.2);
        let exact = gaussian(400, dz, 3.7, 0.6);
        let err: f64 = out.s.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!((err / norm(&exact)).sqrt() < 1e-4);
        assert!(((norm(&out.s) - norm(&s)) / norm(&s)).abs() < 1e-3);
        assert!(out.clipped_fraction < 1e-12);
    }

    #[test]
    fn round_trip() {
        let dz = 0.024;
        let s = gaussian(400, dz, 4.0, 0.6);
        let back = advect_spin_wave(&advect_spin_wave(&s, dz, 1.437).s, dz, -1.437).s;
        let err: f64 = back.iter().zip(&s).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!((err / norm(&s)).sqrt() < 1e-3);
    }

    #[test]
    fn reports_clipping() {
        let dz = 0.024;
        // centered 1 mm before the window edge: half leaves
        let s = gaussian(200, dz, 199.0 * dz - 1.0, 0.6);
        let out = advect_spin_wave(&s, dz, 1.0);
        assert!(out.clipped_fraction > 0.4 && out.clipped_fraction < 0.6);
    }
}
