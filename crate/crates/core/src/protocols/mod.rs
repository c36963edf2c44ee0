//! Scripted storage and transport scenarios, efficiency extraction, lifetime
//! fitting and parameter sweeps.

mod calibrate;
mod fit;
mod runs;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::config::ConfigError;
use crate::conveyor::AccelViolation;
use crate::eit::{output_pulse_energy, SeriesError, SolverError, TimeSeries};

pub use calibrate::{calibrate, calibrate_write_read, calibrate_x_r, inward_ratio, Calibration, CalibrationTargets};
pub use fit::{add_noise, fit_exponential, synthetic_decay, EfficiencyPoint, FitError, FitResult};
pub use runs::{
    reference_run, run_comoving, run_protocol, run_store_retrieve, run_transport_inside, run_transport_interface,
    Direction,
};
pub use sweep::{sweep, sweep_to_csv, SweepRow};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("acceleration infeasible: {0:?}")]
    Infeasible(Vec<AccelViolation>),
    #[error("cloud exits the fiber: {0}")]
    LeavesFiber(String),
    #[error("zero reference energy")]
    ZeroReference,
    #[error("invalid protocol parameter: {0}")]
    Invalid(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Named protocols that the CLI and sweeps can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    StoreRetrieve,
    TransportInside,
    TransportInward,
    TransportOutward,
    Comoving,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::StoreRetrieve,
        Protocol::TransportInside,
        Protocol::TransportInward,
        Protocol::TransportOutward,
        Protocol::Comoving,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::StoreRetrieve => "store_retrieve",
            Protocol::TransportInside => "transport_inside",
            Protocol::TransportInward => "transport_inward",
            Protocol::TransportOutward => "transport_outward",
            Protocol::Comoving => "comoving",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ProtocolError::Invalid(format!("unknown protocol `{s}`")))
    }
}

/// Outcome of one scripted run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub protocol: String,
    #[serde(skip)]
    pub series: TimeSeries,
    #[serde(skip)]
    pub reference_series: TimeSeries,
    pub efficiency: f64,
    pub retrieved_energy: f64,
    pub reference_energy: f64,
    /// Storage to retrieval, s.
    pub elapsed: f64,
    /// Duration of conveyor motion, s.
    pub transport_time: f64,
    /// m
    pub displacement: f64,
    /// m
    pub storage_position: f64,
    /// m
    pub retrieval_position: f64,
    /// Retrieval window in series time, µs.
    pub retrieval_window: (f64, f64),
    pub metadata: BTreeMap<String, f64>,
}

/// η = E_retrieved / E_reference over the given windows (µs).
pub fn storage_efficiency(
    retrieved: &TimeSeries,
    retrieved_window: (f64, f64),
    reference: &TimeSeries,
    reference_window: (f64, f64),
) -> Result<f64, ProtocolError> {
    let e_ref = output_pulse_energy(reference, reference_window.0, reference_window.1)?;
    if !(e_ref > 0.0) {
        return Err(ProtocolError::ZeroReference);
    }
    let e_ret = output_pulse_energy(retrieved, retrieved_window.0, retrieved_window.1)?;
    Ok(e_ret / e_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn pulse(scale: f64) -> TimeSeries {
        let mut s = TimeSeries::default();
        for i in 0..=1000 {
            let t = i as f64 * 0.01;
            s.push(t, Complex64::new(scale * (-(t - 5.0) * (t - 5.0)).exp(), 0.0));
        }
        s
    }

    #[test]
    fn efficiency_examples() {
        let a = pulse(1.0);
        assert!((storage_efficiency(&a, (0.0, 10.0), &a, (0.0, 10.0)).unwrap() - 1.0).abs() < 1e-15);
        let z = pulse(0.0);
        assert_eq!(storage_efficiency(&z, (0.0, 10.0), &a, (0.0, 10.0)).unwrap(), 0.0);
        assert!(matches!(
            storage_efficiency(&a, (0.0, 10.0), &z, (0.0, 10.0)),
            Err(ProtocolError::ZeroReference)
        ));
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert!("teleport".parse::<Protocol>().is_err());
    }
}
