//! Least-squares fit of A·exp(−t/τ) to efficiency data.
//!
//! Levenberg–Marquardt on (A, τ), seeded by a weighted log-linear regression.
//! Standard errors come from the residual-scaled covariance s²(JᵀWJ)⁻¹.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("abscissae are not distinct")]
    DegenerateAbscissa,
    #[error("efficiency must be positive and finite for the log-space seed (point {0})")]
    NonPositive(usize),
    #[error("sigma must be positive and finite when given (point {0})")]
    InvalidSigma(usize),
    #[error("seed regression gives a non-decaying curve (slope {0})")]
    NotDecaying(f64),
    #[error("no convergence after {0} iterations")]
    NotConverged(usize),
    #[error("singular normal equations")]
    Singular,
}

/// One (time, efficiency) measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    /// s
    pub abscissa: f64,
    pub efficiency: f64,
    /// Standard deviation of `efficiency`; 0 means unweighted.
    pub sigma: f64,
}

impl EfficiencyPoint {
    pub fn new(abscissa: f64, efficiency: f64) -> Self {
        Self {
            abscissa,
            efficiency,
            sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub amplitude: f64,
    /// s
    pub tau: f64,
    pub amplitude_err: f64,
    pub tau_err: f64,
    /// sqrt of the (weighted) residual sum of squares.
    pub residual_norm: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 200;

fn model(a: f64, tau: f64, t: f64) -> f64 {
    a * (-t / tau).exp()
}

fn weights(points: &[EfficiencyPoint]) -> Result<Vec<f64>, FitError> {
    let weighted = points.iter().any(|p| p.sigma > 0.0);
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if !weighted {
                Ok(1.0)
            } else if p.sigma > 0.0 && p.sigma.is_finite() {
                Ok(1.0 / (p.sigma * p.sigma))
            } else {
                Err(FitError::InvalidSigma(i))
            }
        })
        .collect()
}

fn rss(points: &[EfficiencyPoint], w: &[f64], a: f64, tau: f64) -> f64 {
    points
        .iter()
        .zip(w)
        .map(|(p, wi)| {
            let r = p.efficiency - model(a, tau, p.abscissa);
            wi * r * r
        })
        .sum()
}

/// JᵀWJ and JᵀWr at (a, τ).
fn normal_equations(points: &[EfficiencyPoint], w: &[f64], a: f64, tau: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut jtj = [[0.0; 2]; 2];
    let mut jtr = [0.0; 2];
    for (p, &wi) in points.iter().zip(w) {
        let e = (-p.abscissa / tau).exp();
        let j = [e, a * e * p.abscissa / (tau * tau)];
        let r = p.efficiency - a * e;
        for k in 0..2 {
            jtr[k] += wi * j[k] * r;
            for l in 0..2 {
                jtj[k][l] += wi * j[k] * j[l];
            }
        }
    }
    (jtj, jtr)
}

fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs() * m[1][1].abs();
    if !(det.abs() > 1e-14 * scale) || det == 0.0 {
        return None;
    }
    Some([
        (b[0] * m[1][1] - b[1] * m[0][1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ])
}

/// Weighted regression of ln η on t; weights σ_ln = σ/η.
fn log_linear_seed(points: &[EfficiencyPoint], w: &[f64]) -> Result<(f64, f64), FitError> {
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &wi) in points.iter().zip(w) {
        let wl = wi * p.efficiency * p.efficiency;
        let y = p.efficiency.ln();
        sw += wl;
        st += wl * p.abscissa;
        sy += wl * y;
        stt += wl * p.abscissa * p.abscissa;
        sty += wl * p.abscissa * y;
    }
    let den = sw * stt - st * st;
    if !(den > 0.0) {
        return Err(FitError::DegenerateAbscissa);
    }
    let slope = (sw * sty - st * sy) / den;
    let intercept = (sy - slope * st) / sw;
    if !(slope < 0.0) {
        return Err(FitError::NotDecaying(slope));
    }
    Ok((intercept.exp(), -1.0 / slope))
}

/// Fits A·exp(−t/τ). Points with σ > 0 are weighted by 1/σ²; if any point
/// carries a σ, all must.
pub fn fit_exponential(points: &[EfficiencyPoint]) -> Result<FitResult, FitError> {
    let n = points.len();
    if n < 3 {
        return Err(FitError::TooFewPoints(n));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.efficiency > 0.0 && p.efficiency.is_finite() && p.abscissa.is_finite()) {
            return Err(FitError::NonPositive(i));
        }
    }
    let mut ts: Vec<f64> = points.iter().map(|p| p.abscissa).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 2 {
        return Err(FitError::DegenerateAbscissa);
    }
    let w = weights(points)?;
    let (mut a, mut tau) = log_linear_seed(points, &w)?;
    let mut cost = rss(points, &w, a, tau);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;
    while !converged && iterations < MAX_ITER {
        iterations += 1;
        let (jtj, jtr) = normal_equations(points, &w, a, tau);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut m = jtj;
            m[0][0] *= 1.0 + lambda;
            m[1][1] *= 1.0 + lambda;
            let Some(step) = solve2(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let (a1, tau1) = (a + step[0], tau + step[1]);
            let c1 = if tau1 > 0.0 {
                rss(points, &w, a1, tau1)
            } else {
                f64::INFINITY
            };
            if c1 <= cost {
                let small_step = step[0].abs() <= 1e-13 * a.abs() && step[1].abs() <= 1e-13 * tau;
                let small_gain = cost - c1 <= 1e-15 * cost;
                a = a1;
                tau = tau1;
                cost = c1;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                converged = small_step || small_gain || cost == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill direction left: at the minimum to working precision
            converged = true;
        }
    }
    if !converged {
        return Err(FitError::NotConverged(MAX_ITER));
    }

    let (jtj, _) = normal_equations(points, &w, a, tau);
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if !(det > 0.0) {
        return Err(FitError::Singular);
    }
    let s2 = cost / (n - 2) as f64;
    Ok(FitResult {
        amplitude: a,
        tau,
        amplitude_err: (s2 * jtj[1][1] / det).sqrt(),
        tau_err: (s2 * jtj[0][0] / det).sqrt(),
        residual_norm: cost.sqrt(),
        iterations,
    })
}

/// Multiplies each efficiency by (1 + `noise_rel`·N(0, 1)) and sets its σ to
/// `noise_rel`·(original value). Deterministic for a given seed.
pub fn add_noise(points: &[EfficiencyPoint], noise_rel: f64, seed: u64) -> Vec<EfficiencyPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    points
        .iter()
        .map(|p| {
            let y = p.efficiency;
            let noise = if noise_rel > 0.0 {
                noise_rel * y * unit.sample(&mut rng)
            } else {
                0.0
            };
            EfficiencyPoint {
                abscissa: p.abscissa,
                efficiency: y + noise,
                sigma: noise_rel * y,
            }
        })
        .collect()
}

/// Samples A·exp(−t/τ) at `times` with relative Gaussian noise, see [`add_noise`].
pub fn synthetic_decay(amplitude: f64, tau: f64, times: &[f64], noise_rel: f64, seed: u64) -> Vec<EfficiencyPoint> {
    let exact: Vec<_> = times
        .iter()
        .map(|&t| EfficiencyPoint {
            abscissa: t,
            efficiency: model(amplitude, tau, t),
            sigma: 0.0,
        })
        .collect();
    add_noise(&exact, noise_rel, seed)
}
