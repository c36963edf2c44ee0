//! Piecewise-linear control-field schedules.

use serde::{Deserialize, Serialize};

/// A named instant in a run (storage, retrieval, transport start/stop, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMarker {
    pub name: String,
    /// s
    pub t: f64,
}

impl EventMarker {
    pub fn new(name: impl Into<String>, t: f64) -> Self {
        Self { name: name.into(), t }
    }
}

/// Ω_c(t) as linear interpolation between knots, constant outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    /// (t in s, Ω_c in rad/s), strictly increasing in t.
    knots: Vec<(f64, f64)>,
    events: Vec<EventMarker>,
}

impl ControlSchedule {
    pub fn new(knots: Vec<(f64, f64)>, events: Vec<EventMarker>) -> Result<Self, String> {
        if knots.is_empty() {
            return Err("control schedule needs at least one knot".into());
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(format!("knot times must increase ({} then {})", w[0].0, w[1].0));
            }
        }
        if let Some(k) = knots
            .iter()
            .find(|k| !(k.1 >= 0.0 && k.1.is_finite() && k.0.is_finite()))
        {
            return Err(format!("invalid knot ({}, {})", k.0, k.1));
        }
        Ok(Self { knots, events })
    }

    pub fn constant(rabi: f64) -> Self {
        Self::new(vec![(0.0, rabi)], Vec::new()).expect("single knot")
    }

    /// On at `rabi`, ramps to zero over `[t_off, t_off + ramp]`, and if
    /// `t_on` is given ramps back up over `[t_on, t_on + ramp]`.
    pub fn store_retrieve(rabi: f64, t_off: f64, ramp: f64, t_on: Option<f64>) -> Self {
        let ramp = ramp.max(1e-15);
        let mut knots = vec![(t_off, rabi), (t_off + ramp, 0.0)];
        let mut events = vec![
            EventMarker::new("switch_off", t_off),
            EventMarker::new("storage", t_off + ramp),
        ];
        if let Some(t_on) = t_on {
            let t_on = t_on.max(t_off + ramp + 1e-15);
            knots.push((t_on, 0.0));
            knots.push((t_on + ramp, rabi));
            events.push(EventMarker::new("retrieval", t_on));
        }
        Self::new(knots, events).expect("ordered knots")
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let i = k.partition_point(|p| p.0 <= t) - 1;
        let (t0, v0) = k[i];
        let (t1, v1) = k[i + 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Largest value over [a, b] (exact for piecewise-linear data).
    pub fn max_over(&self, a: f64, b: f64) -> f64 {
        self.knots
            .iter()
            .filter(|k| k.0 > a && k.0 < b)
            .map(|k| k.1)
            .fold(self.at(a).max(self.at(b)), f64::max)
    }

    /// Shortest non-constant segment, the edge duration dt must resolve.
    pub fn shortest_edge(&self) -> Option<f64> {
        self.knots
            .windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| w[1].0 - w[0].0)
            .reduce(f64::min)
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn events(&self) -> &[EventMarker] {
        &self.events
    }

    pub fn event(&self, name: &str) -> Option<f64> {
        self.events.iter().find(|e| e.name == name).map(|e| e.t)
    }
}
