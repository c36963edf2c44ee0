//! Output time series at the far end of the medium.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EventMarker, FieldState};

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("empty integration window [{0}, {1}]")]
    EmptyWindow(f64, f64),
}

/// Probe output at the far end of the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries {
    /// µs, strictly increasing
    pub t: Vec<f64>,
    /// |E|² / `power_unit`, i.e. relative to the peak input power.
    pub power: Vec<f64>,
    /// Complex output envelope E in rad/µs.
    pub field: Vec<Complex64>,
    /// Peak input |E|², (rad/µs)².
    pub power_unit: f64,
    pub events: Vec<EventMarker>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
}

/// Field state captured at a named instant, with what is needed to view it as
/// polaritons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub name: String,
    pub state: FieldState,
    /// OD per mm on the grid.
    pub coupling: Vec<f64>,
    /// rad/µs
    pub gamma: f64,
    /// Control Rabi frequency at the snapshot, rad/µs.
    pub omega_c: f64,
}

impl Default for TimeSeries {
    fn default() -> Self {
        Self {
            t: Vec::new(),
            power: Vec::new(),
            field: Vec::new(),
            power_unit: 1.0,
            events: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

impl TimeSeries {
    pub fn push(&mut self, t: f64, field: Complex64) {
        if let Some(&last) = self.t.last() {
            if t <= last {
                return;
            }
        }
        self.t.push(t);
        self.power.push(field.norm_sqr() / self.power_unit);
        self.field.push(field);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn event(&self, name: &str) -> Option<f64> {
        self.events.iter().find(|e| e.name == name).map(|e| e.t)
    }

    pub fn peak(&self) -> Option<(f64, f64)> {
        self.t
            .iter()
            .zip(&self.power)
            .map(|(&t, &p)| (t, p))
            .reduce(|a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_us,P_out\n");
        for (t, p) in self.t.iter().zip(&self.power) {
            out.push_str(&format!("{t:.6},{p:.9e}\n"));
        }
        out
    }
}

/// Trapezoidal integral of the output power over `[t_a, t_b]` (µs), with
/// linear interpolation at the window edges.
pub fn output_pulse_energy(series: &TimeSeries, t_a: f64, t_b: f64) -> Result<f64, SeriesError> {
    let (t, p) = (&series.t, &series.power);
    if !(t_a < t_b) || t.len() < 2 || t_b <= t[0] || t_a >= t[t.len() - 1] {
        return Err(SeriesError::EmptyWindow(t_a, t_b));
    }
    let interp = |x: f64| -> f64 {
        let i = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1);
        let (t0, t1) = (t[i - 1], t[i]);
        p[i - 1] + (p[i] - p[i - 1]) * (x - t0) / (t1 - t0)
    };
    let a = t_a.max(t[0]);
    let b = t_b.min(t[t.len() - 1]);
    let mut xs = vec![(a, interp(a))];
    xs.extend(t.iter().zip(p).filter(|(&s, _)| s > a && s < b).map(|(&s, &q)| (s, q)));
    xs.push((b, interp(b)));
    Ok(xs.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum())
}
